#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "optree/qud.hpp"
#include "optree/remote.hpp"
#include "support/fixtures.hpp"

using namespace optree;

namespace {

std::shared_ptr<const JsonTransport> returning(Json reply) {
    return std::make_shared<FunctionTransport>([reply](const Json&) { return reply; });
}

std::shared_ptr<const JsonTransport> failing() {
    return std::make_shared<FunctionTransport>([](const Json&) -> Json { throw TransportError("refused"); });
}

/// Loopback JSON endpoint on an ephemeral port.
class EchoServer {
public:
    explicit EchoServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/endpoint", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EchoServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/endpoint"; }

private:
    httplib::Server server_;
    int port_ = -1;
    std::thread thread_;
};

} // namespace

TEST(RemoteScorer, SendsQueryAndVerbalization) {
    Json seen;
    auto t = std::make_shared<FunctionTransport>([&](const Json& body) {
        seen = body;
        return Json{{"score", 0.75}};
    });
    RemoteScorer scorer(t);
    EXPECT_DOUBLE_EQ(scorer.score("yoga", "workout | yoga"), 0.75);
    EXPECT_EQ(seen["query"], "yoga");
    EXPECT_EQ(seen["verbalization"], "workout | yoga");
}

TEST(RemoteScorer, BadRepliesMakeItUnavailable) {
    EXPECT_THROW(RemoteScorer(returning(Json{{"score", 1.5}})).score("q", "v"), ScorerUnavailable);
    EXPECT_THROW(RemoteScorer(returning(Json{{"score", -0.1}})).score("q", "v"), ScorerUnavailable);
    EXPECT_THROW(RemoteScorer(returning(Json{{"score", "high"}})).score("q", "v"), ScorerUnavailable);
    EXPECT_THROW(RemoteScorer(returning(Json::object())).score("q", "v"), ScorerUnavailable);
    EXPECT_THROW(RemoteScorer(failing()).score("q", "v"), ScorerUnavailable);
}

TEST(RemoteScorer, RetrievalSurvivesAnOfflineScorer) {
    const auto& f1 = testsupport::f1_store();
    auto resources = Resources::bundled();
    Pipeline p(EventStore(std::vector<Event>(f1.events().begin(), f1.events().end())), resources, {},
               std::make_shared<RemoteScorer>(failing()));
    auto out = p.retriever().retrieve("workout events");
    EXPECT_EQ(testsupport::item_ids(out.items, p.store()),
              (std::vector<std::vector<std::string>>{{"e1", "e3"}, {"e4"}}));
}

TEST(RemoteExtractor, ReturnsTypedValues) {
    Json seen;
    auto t = std::make_shared<FunctionTransport>([&](const Json& body) {
        seen = body;
        return Json{{"value", 42}};
    });
    RemoteExtractor ex(t);
    const auto& e3 = testsupport::f1_store()[testsupport::f1_ref("e3")];
    EXPECT_EQ(ex.extract(e3, "verbalized", "calories"), Value(42));
    EXPECT_EQ(seen["key"], "calories");
    EXPECT_EQ(seen["text"], "Great yoga session this morning!");
    EXPECT_TRUE(RemoteExtractor(returning(Json{{"value", nullptr}})).extract(e3, "v", "k").is_null());
    EXPECT_THROW(RemoteExtractor(returning(Json{{"nope", 1}})).extract(e3, "v", "k"), ExtractorUnavailable);
    EXPECT_THROW(RemoteExtractor(failing()).extract(e3, "v", "k"), ExtractorUnavailable);
}

TEST(BearerHeaders, ReadFromEnvironment) {
    ::setenv("OPTREE_TEST_KEY", "sekrit", 1);
    auto h = bearer_headers("OPTREE_TEST_KEY");
    EXPECT_EQ(h.at("Authorization"), "Bearer sekrit");
    ::unsetenv("OPTREE_TEST_KEY");
    EXPECT_TRUE(bearer_headers("OPTREE_TEST_KEY").empty());
    EXPECT_TRUE(bearer_headers("").empty());
}

TEST(HttpJsonTransport, PostsOverLoopback) {
    EchoServer server([](const httplib::Request& req, httplib::Response& res) {
        auto body = Json::parse(req.body);
        res.set_content(Json{{"echo", body["x"]}, {"auth", req.get_header_value("Authorization")}}.dump(),
                        "application/json");
    });
    HttpJsonTransport t(server.url(), {{"Authorization", "Bearer k"}});
    auto reply = t.post(Json{{"x", 7}});
    EXPECT_EQ(reply["echo"], 7);
    EXPECT_EQ(reply["auth"], "Bearer k");
}

TEST(HttpJsonTransport, ErrorsBecomeTransportErrors) {
    EchoServer server([](const httplib::Request& req, httplib::Response& res) {
        if (req.body.find("fail") != std::string::npos) {
            res.status = 503;
            res.set_content("{}", "application/json");
        } else {
            res.set_content("not json", "text/plain");
        }
    });
    HttpJsonTransport t(server.url());
    EXPECT_THROW(t.post(Json{{"mode", "fail"}}), TransportError);
    EXPECT_THROW(t.post(Json{{"mode", "garbage"}}), TransportError);
    HttpJsonTransport nobody("http://127.0.0.1:1/endpoint", {}, std::chrono::seconds(2));
    EXPECT_THROW(nobody.post(Json::object()), TransportError);
    EXPECT_THROW(HttpJsonTransport("ftp://example.org/x"), Error);
}

TEST(HttpChatClient, ReadsFirstChoice) {
    Json seen;
    auto t = std::make_shared<FunctionTransport>([&](const Json& body) {
        seen = body;
        return Json{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", "hi"}}}}})}};
    });
    HttpChatClient client(t, "local-model", 0.0);
    EXPECT_EQ(client.complete({{"user", "hello"}}), "hi");
    EXPECT_EQ(seen["model"], "local-model");
    EXPECT_EQ(seen["messages"][0]["content"], "hello");
    HttpChatClient broken(returning(Json{{"choices", Json::array()}}), "m", 0.0);
    EXPECT_THROW(broken.complete({{"user", "x"}}), TransportError);
}
