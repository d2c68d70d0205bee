#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fdescent/llm/chat.hpp"
#include "fdescent/llm/http_backend.hpp"
#include "fdescent/llm/scripted.hpp"
#include "fdescent/llm/template.hpp"
#include "fdescent/stats/rng.hpp"

using namespace fdescent;
using namespace fdescent::llm;
using Kind = ScriptedBackend::Kind;

namespace {

ChatRequest user_request(std::string text, int attempts = 3) {
    ChatRequest r;
    r.model = "m";
    r.messages = {{Role::user, std::move(text)}};
    r.max_attempts = attempts;
    return r;
}

}  // namespace

TEST(Complete, ReturnsScriptedReply) {
    ScriptedBackend b({"<smiles>CCO</smiles>"});
    EXPECT_EQ(complete(b, user_request("x"), RetryPolicy::immediate()), "<smiles>CCO</smiles>");
}

TEST(Complete, RetriesTransientFailuresWithBackoff) {
    ScriptedBackend b;
    b.fail(Kind::transient).fail(Kind::transient).push("ok");
    std::vector<long long> waits;
    RetryPolicy p;
    p.initial_delay = std::chrono::milliseconds(100);
    p.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d.count()); };
    EXPECT_EQ(complete(b, user_request("x", 3), p), "ok");
    EXPECT_EQ(b.call_count(), 3u);
    EXPECT_EQ(waits, (std::vector<long long>{100, 200}));
}

TEST(Complete, ExhaustedRetriesRaiseBackendError) {
    ScriptedBackend b;
    b.fail(Kind::transient).fail(Kind::transient).push("late");
    EXPECT_THROW(complete(b, user_request("x", 2), RetryPolicy::immediate()), BackendError);
    EXPECT_EQ(b.call_count(), 2u);
}

TEST(Complete, EmptyQueueIsBackendError) {
    ScriptedBackend b;
    EXPECT_THROW(complete(b, user_request("x"), RetryPolicy::immediate()), BackendError);
    EXPECT_EQ(b.call_count(), 1u);
}

TEST(Complete, ProtocolErrorsAreNotRetried) {
    ScriptedBackend b;
    b.fail(Kind::protocol).push("never");
    EXPECT_THROW(complete(b, user_request("x"), RetryPolicy::immediate()), ProtocolError);
    EXPECT_EQ(b.call_count(), 1u);
}

TEST(Complete, DoesNotMutateRequestAndLogsEveryAttempt) {
    ScriptedBackend b;
    b.fail(Kind::transient).push("ok");
    const auto req = user_request("hello");
    const auto copy = req;
    complete(b, req, RetryPolicy::immediate());
    EXPECT_EQ(req, copy);
    ASSERT_EQ(b.calls().size(), 2u);
    EXPECT_EQ(b.calls()[1], req);
}

TEST(Complete, RejectsInvalidRequests) {
    ScriptedBackend b({"x"});
    ChatRequest r;
    EXPECT_THROW(complete(b, r), ConfigError);
    r = user_request("x", 0);
    EXPECT_THROW(complete(b, r), ConfigError);
}

TEST(CompleteMany, ResultsKeepInputOrderUnderConcurrency) {
    std::atomic<int> in_flight{0}, peak{0};
    ScriptedBackend b([&](const ChatRequest& r) {
        const int now = ++in_flight;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight;
        if (r.messages[0].content == "boom") throw BackendError("no");
        return "echo:" + r.messages[0].content;
    });
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 20; ++i) reqs.push_back(user_request(i == 7 ? "boom" : std::to_string(i)));
    const auto out = complete_many(b, reqs, 3, RetryPolicy::immediate());
    ASSERT_EQ(out.size(), 20u);
    for (int i = 0; i < 20; ++i) {
        if (i == 7) {
            EXPECT_FALSE(out[i].ok());
            EXPECT_NE(out[i].error.find("no"), std::string::npos);
        } else {
            EXPECT_EQ(*out[i].text, "echo:" + std::to_string(i));
        }
    }
    EXPECT_LE(peak.load(), 3);
}

TEST(Template, RendersAndReportsMissingPlaceholders) {
    PromptTemplate t("t", "Hello {name}, score {score}.");
    EXPECT_EQ(t.required(), (std::set<std::string>{"name", "score"}));
    EXPECT_EQ(t.render({{"name", "x"}, {"score", "9"}}), "Hello x, score 9.");
    EXPECT_THROW(t.render({{"name", "x"}}), TemplateError);
}

TEST(Template, BoundValuesAreNeverRescanned) {
    PromptTemplate t("t", "A={a} B={b}");
    EXPECT_EQ(t.render({{"a", "{b}"}, {"b", "{a}"}}), "A={b} B={a}");
    EXPECT_EQ(t.render({{"a", "{ 'k': {x} }"}, {"b", "}{"}}), "A={ 'k': {x} } B=}{");
}

TEST(Template, NonIdentifierBracesAreLiteral) {
    PromptTemplate t("t", "{ 'target': 1 } {} {9x} {ok}");
    EXPECT_EQ(t.placeholders(), (std::set<std::string>{"ok"}));
    EXPECT_EQ(t.render({{"ok", "!"}}), "{ 'target': 1 } {} {9x} !");
}

TEST(Template, OptionalPlaceholdersStayVerbatim) {
    PromptTemplate t("t", "{a}{b}", {"a"});
    EXPECT_EQ(t.render({{"a", "1"}}), "1{b}");
}

TEST(Template, RenderIsPure) {
    PromptTemplate t("t", "{x}-{y}-{x}");
    const std::map<std::string, std::string> b{{"x", "1"}, {"y", "{x}"}};
    EXPECT_EQ(t.render(b), t.render(b));
    EXPECT_EQ(t.render(b), "1-{x}-1");
}

TEST(Template, ShippedAssetsExposeExpectedPlaceholders) {
    EXPECT_EQ(PromptTemplate::load("molecule_system").placeholders(),
              (std::set<std::string>{"benchmark_name", "protein_info_xml", "examples_text"}));
    EXPECT_EQ(PromptTemplate::load("prompt_improver").placeholders(),
              (std::set<std::string>{"prompt_a_dict", "prompt_b_dict", "comparison", "module_keys_description",
                                     "prompt_template"}));
    const auto rubric = PromptTemplate::load("anatomy_judge_rubric");
    EXPECT_TRUE(rubric.placeholders().empty());
    EXPECT_EQ(rubric.body().rfind("RUBRIC NAME: Anatomical Realism\n", 0), 0u);
    EXPECT_THROW(PromptTemplate::load("does_not_exist"), InputError);
}

TEST(ParseTagged, Examples) {
    EXPECT_EQ(parse_tagged("<smiles>CCO</smiles>", "smiles"), "CCO");
    EXPECT_EQ(parse_tagged("<reasoning>x</reasoning><smiles> C1CC1 </smiles>", "smiles"), "C1CC1");
    EXPECT_EQ(parse_tagged("<smiles>a</smiles><smiles>b</smiles>", "smiles"), "a");
    try {
        parse_tagged("no tags here", "smiles");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.raw(), "no tags here");
    }
    EXPECT_THROW(parse_tagged("<smiles>CCO", "smiles"), ParseError);
}

TEST(ParseTagged, RoundTripsTagFreeText) {
    stats::RngStream rng(3);
    const std::string alphabet = "abcXYZ019 ()=#[]@+-\n\t{}";
    for (int i = 0; i < 500; ++i) {
        std::string x;
        const auto n = rng.uniform_index(40);
        for (std::uint64_t k = 0; k < n; ++k) x += alphabet[rng.uniform_index(alphabet.size())];
        const std::string trimmed(util::trim(x));
        PromptTemplate t("t", "<reasoning>r</reasoning><t>{x}</t>");
        EXPECT_EQ(parse_tagged(t.render({{"x", x}}), "t"), trimmed);
    }
}

class HttpBackendTest : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            if (n <= fail_first_) {
                res.status = 503;
                return;
            }
            if (malformed_) {
                res.set_content("{\"choices\": []}", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json out = {
                {"choices",
                 {{{"message", {{"role", "assistant"}, {"content", "re:" + body["messages"][0]["content"].get<std::string>()}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    Endpoint endpoint() const { return {"http://127.0.0.1:" + std::to_string(port_) + "/v1/", "sk-test", "tiny"}; }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    int fail_first_ = 0;
    bool malformed_ = false;
    std::string last_body_, last_auth_;
};

TEST_F(HttpBackendTest, SendsChatSchemaAndParsesContent) {
    HttpChatBackend b(endpoint());
    ChatRequest r;
    r.messages = {{Role::system, "sys"}, {Role::user, "hi"}};
    r.temperature = 0.0;
    EXPECT_EQ(complete(b, r, RetryPolicy::immediate()), "re:sys");
    const auto body = nlohmann::json::parse(last_body_);
    EXPECT_EQ(body["model"], "tiny");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(last_auth_, "Bearer sk-test");
}

TEST_F(HttpBackendTest, RetriesServerErrors) {
    fail_first_ = 2;
    HttpChatBackend b(endpoint());
    EXPECT_EQ(complete(b, user_request("q", 3), RetryPolicy::immediate()), "re:q");
    EXPECT_EQ(hits_.load(), 3);
}

TEST_F(HttpBackendTest, MalformedBodyIsProtocolError) {
    malformed_ = true;
    HttpChatBackend b(endpoint());
    EXPECT_THROW(complete(b, user_request("q"), RetryPolicy::immediate()), ProtocolError);
    EXPECT_EQ(hits_.load(), 1);
}

TEST(HttpBackend, UnreachableHostIsTransient) {
    HttpChatBackend b({"http://127.0.0.1:1", "", "m", std::chrono::seconds(1)});
    EXPECT_THROW(b.send(user_request("q")), TransientError);
    EXPECT_THROW(HttpChatBackend({"localhost", "", ""}), ConfigError);
}
