#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "evcomp/errors.hpp"
#include "evcomp/templates.hpp"

using namespace evcomp;
using namespace evcomp::harness;

namespace {

EvidenceBundle demo_bundle() {
    EvidenceBundle bundle;
    bundle.id = "b1";
    bundle.query = "who wrote it";
    bundle.documents = {"first snippet text", "second snippet", "third one"};
    bundle.gold_answers = {"someone"};
    return bundle;
}

}  // namespace

TEST_SUITE("templates") {

TEST_CASE("compression render carries every document verbatim, in order") {
    PromptTemplateSet templates;
    EvidenceBundle bundle = demo_bundle();
    std::string text = render_compression_context(templates, bundle);

    std::size_t pos = 0;
    for (const std::string& doc : bundle.documents) {
        std::size_t found = text.find(doc, pos);
        REQUIRE(found != std::string::npos);
        pos = found + doc.size();
    }
    CHECK(text.find(bundle.query) != std::string::npos);
    CHECK(text.rfind("Summarized Context:") == text.size() - 19);
    CHECK(text.find(templates.compression_instruction) == 0);
}

TEST_CASE("generation render has the question but no document text") {
    PromptTemplateSet templates;
    EvidenceBundle bundle = demo_bundle();
    std::string text = render_generation_context(templates, bundle);
    CHECK(text.find(bundle.query) != std::string::npos);
    for (const std::string& doc : bundle.documents) {
        CHECK(text.find(doc) == std::string::npos);
    }
    CHECK(text.rfind("Context:") == text.size() - 8);
    CHECK(text.find("Documents:") == std::string::npos);
}

TEST_CASE("renders are byte-identical across repeated calls") {
    PromptTemplateSet templates;
    EvidenceBundle bundle = demo_bundle();
    CHECK(render_compression_context(templates, bundle) ==
          render_compression_context(templates, bundle));
    CHECK(render_generation_context(templates, bundle) ==
          render_generation_context(templates, bundle));
    CHECK(render_eval_prompt(templates, "q", "ctx") == render_eval_prompt(templates, "q", "ctx"));
}

TEST_CASE("the two instructions differ and demos appear only in the eval prompt") {
    PromptTemplateSet templates;
    templates.demonstrations = {{"demo question", "demo answer"}};
    EvidenceBundle bundle = demo_bundle();
    CHECK(templates.compression_instruction != templates.generation_instruction);
    CHECK(render_compression_context(templates, bundle).find("demo question") ==
          std::string::npos);
    CHECK(render_generation_context(templates, bundle).find("demo question") ==
          std::string::npos);
    std::string eval = render_eval_prompt(templates, bundle.query, "some context");
    CHECK(eval.find("Question: demo question\nAnswer: demo answer") != std::string::npos);
}

TEST_CASE("eval prompt layouts") {
    PromptTemplateSet templates;
    std::string qf = render_eval_prompt(templates, "the question", "the context");
    CHECK(qf.find("Question: the question\nContext: the context\nAnswer:") != std::string::npos);

    templates.eval_layout = EvalLayout::context_first;
    std::string cf = render_eval_prompt(templates, "the question", "the context");
    CHECK(cf.find("Context: the context\nQuestion: the question\nAnswer:") != std::string::npos);

    // empty compressed evidence leaves an empty context slot
    templates.eval_layout = EvalLayout::question_first;
    std::string empty_ctx = render_eval_prompt(templates, "q", "");
    CHECK(empty_ctx.find("Context:\nAnswer:") != std::string::npos);
}

TEST_CASE("eval prefix is the eval prompt up to the context slot") {
    PromptTemplateSet templates;
    templates.demonstrations = {{"dq", "da"}};
    std::string prefix = render_eval_prefix(templates, "the question");
    std::string full = render_eval_prompt(templates, "the question", "CTX");
    CHECK(full.rfind(prefix, 0) == 0);  // prefix property
    CHECK(prefix.rfind("Context:") == prefix.size() - 8);
    CHECK(prefix.find("the question") != std::string::npos);  // question-first conditions on q
}

TEST_CASE("validation rejects degenerate template sets") {
    PromptTemplateSet templates;
    templates.compression_instruction = "";
    CHECK_THROWS_AS(templates.validate(), ConfigError);
    templates.compression_instruction = "same words";
    templates.generation_instruction = "same words";
    CHECK_THROWS_AS(templates.validate(), ConfigError);
}

TEST_CASE("fingerprint tracks content") {
    PromptTemplateSet a;
    PromptTemplateSet b;
    CHECK(a.fingerprint() == b.fingerprint());
    b.eval_layout = EvalLayout::context_first;
    CHECK(a.fingerprint() != b.fingerprint());
    PromptTemplateSet c;
    c.demonstrations = {{"q", "a"}};
    CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("the shipped per-dataset template files load and validate") {
    auto dir = std::filesystem::path(__FILE__).parent_path().parent_path() / "templates";
    std::size_t expected_demos[] = {5, 5, 5, 5, 4};
    const char* names[] = {"nq", "tqa", "hqa", "wiki", "mq"};
    for (int i = 0; i < 5; ++i) {
        auto path = dir / (std::string(names[i]) + ".json");
        REQUIRE(std::filesystem::exists(path));
        PromptTemplateSet t = PromptTemplateSet::load(path);
        CHECK(t.demonstrations.size() == expected_demos[i]);
        CHECK(t.eval_layout == EvalLayout::question_first);
        CHECK_NOTHROW(t.validate());
        // the compression side never carries demonstrations
        EvidenceBundle bundle{"x", "q", {"doc"}, {"a"}};
        CHECK(render_compression_context(t, bundle).find(t.demonstrations[0].question) ==
              std::string::npos);
    }
}

TEST_CASE("template file loading") {
    auto dir = std::filesystem::temp_directory_path() / "evcomp_tpl_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "templates.json";
    {
        std::ofstream out(path);
        out << R"({
          "compression_instruction": "sum docs",
          "generation_instruction": "gen ctx",
          "eval_system_prompt": "answer briefly",
          "eval_layout": "context-first",
          "demonstrations": [{"question": "q1", "answer": "a1"}]
        })";
    }
    PromptTemplateSet loaded = PromptTemplateSet::load(path);
    CHECK(loaded.compression_instruction == "sum docs");
    CHECK(loaded.generation_instruction == "gen ctx");
    CHECK(loaded.eval_system_prompt == "answer briefly");
    CHECK(loaded.eval_layout == EvalLayout::context_first);
    REQUIRE(loaded.demonstrations.size() == 1);
    CHECK(loaded.demonstrations[0].question == "q1");

    {
        std::ofstream out(path);
        out << R"({"eval_layout": "sideways"})";
    }
    CHECK_THROWS_AS(PromptTemplateSet::load(path), ConfigError);
    {
        std::ofstream out(path);
        out << "not json";
    }
    CHECK_THROWS_AS(PromptTemplateSet::load(path), ConfigError);
    CHECK_THROWS_AS(PromptTemplateSet::load(dir / "missing.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
