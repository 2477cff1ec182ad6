#include "doctest.h"

#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "support/fixtures.hpp"
#include "tie/service.hpp"

using namespace tie;
using namespace tie::testing;
using nlohmann::json;

namespace {

json parse(const HttpResponse& r) { return json::parse(r.body); }

std::unique_ptr<Service> fig1_service(std::size_t shards = 1) {
    auto s = std::make_unique<Service>();
    s->load(fig1(), shards);
    return s;
}

}  // namespace

TEST_CASE("query on fig1") {
    const auto service = fig1_service();
    const auto& s = *service;
    const auto r = s.handle_query(R"({"selection":[{"cat":"c"},{"cat":"a"}]})");
    REQUIRE(r.status == 200);
    const auto body = parse(r);
    CHECK(body["item_count"] == 2);
    CHECK(body["items"][0]["name"] == "A");
    CHECK(body["items"][1]["name"] == "C");
    CHECK(body["unavailable"] == json::array({3}));
    CHECK(body["selection"][0] == json({{"id", 2}, {"neg", false}, {"count", 2}}));
    CHECK(body["selection"][1] == json({{"id", 0}, {"neg", false}, {"count", 2}}));
    const auto& groups = body["available"];
    REQUIRE(groups.size() == 1);
    CHECK(groups[0]["group"] == "default");
    CHECK(groups[0]["combinator"] == "ALL");
    CHECK(groups[0]["categories"] == json::parse(R"([{"id":1,"count":1},{"id":4,"count":1}])"));
    CHECK(body["names"]["3"] == "d");
    CHECK(body["fingerprint"] == fig1().fingerprint());
}

TEST_CASE("ids and names are interchangeable; negation") {
    const auto service = fig1_service();
    const auto& s = *service;
    CHECK(s.handle_query(R"({"selection":[{"cat":2},{"cat":0}]})").body ==
          s.handle_query(R"({"selection":[{"cat":"c"},{"cat":"a"}]})").body);
    const auto body = parse(s.handle_query(R"({"selection":[{"cat":"d","neg":true}]})"));
    CHECK(body["item_count"] == 2);
    CHECK(body["selection"][0]["count"] == 0);
}

TEST_CASE("empty selection and paging") {
    const auto service = fig1_service();
    const auto& s = *service;
    const auto all = parse(s.handle_query("{}"));
    CHECK(all["item_count"] == 3);
    CHECK(all["items"].size() == 3);
    const auto page = parse(s.handle_query(R"({"offset":1,"limit":1})"));
    CHECK(page["item_count"] == 3);
    REQUIRE(page["items"].size() == 1);
    CHECK(page["items"][0]["name"] == "B");
    CHECK(page["available"] == all["available"]);
    CHECK(parse(s.handle_query(R"({"offset":10})"))["items"].empty());
}

TEST_CASE("query errors") {
    const auto service = fig1_service();
    const auto& s = *service;
    auto code = [&](std::string_view body) {
        const auto r = s.handle_query(body);
        return std::make_pair(r.status, parse(r)["code"].get<std::string>());
    };
    CHECK(code("not json") == std::make_pair(400, std::string("malformed_body")));
    CHECK(code("[]") == std::make_pair(400, std::string("malformed_body")));
    CHECK(code(R"({"selection":[{"cat":"zzz"}]})") == std::make_pair(400, std::string("unknown_category")));
    CHECK(code(R"({"selection":[{"cat":99}]})") == std::make_pair(400, std::string("unknown_category")));
    CHECK(code(R"({"selection":[{"cat":"a"},{"cat":0}]})") == std::make_pair(400, std::string("invalid_selection")));
    CHECK(code(R"({"limit":-1})") == std::make_pair(400, std::string("malformed_body")));
    CHECK(code(R"({"selection":[{"cat":"a","neg":"yes"}]})") == std::make_pair(400, std::string("malformed_body")));

    Service empty;
    CHECK(empty.handle_query("{}").status == 503);
    CHECK(parse(empty.handle_query("{}"))["code"] == "no_index");
    CHECK(empty.handle_meta().status == 503);
    CHECK(empty.handle_typeahead("{}").status == 503);
    CHECK(empty.handle_health().status == 200);
}

TEST_CASE("meta") {
    const auto body = parse(fig1_service()->handle_meta());
    CHECK(body["n"] == 5);
    CHECK(body["N"] == 3);
    CHECK(body["fingerprint"] == fig1().fingerprint());
    CHECK(body["typeahead"] == false);
}

TEST_CASE("sharded responses are byte-identical") {
    std::mt19937_64 rng(31);
    Grouping grouping;
    auto base = random_index(rng, 400, 25, 1, 6);
    for (CategoryId c = 0; c < 8; ++c) grouping[base.category_name(c)] = {"Facet", Combinator::Any};
    const auto index = AssociationIndex::build(base.dump(), grouping);
    Service single, two, five;
    single.load(index, 1);
    two.load(index, 2);
    five.load(index, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sel = random_selection(rng, index.category_count(), 3, 0.2);
        json req;
        req["selection"] = json::array();
        for (const auto& e : sel) req["selection"].push_back({{"cat", e.category}, {"neg", e.polarity == Polarity::Negated}});
        req["limit"] = 1000;
        const auto body = req.dump();
        const auto expected = single.handle_query(body);
        REQUIRE(expected.status == 200);
        REQUIRE(two.handle_query(body).body == expected.body);
        REQUIRE(five.handle_query(body).body == expected.body);
        // the response mirrors the engine
        const auto result = evaluate(index, sel);
        REQUIRE(parse(expected)["item_count"] == result.item_count());
    }
}

TEST_CASE("scatter-gather guards") {
    const auto index = fig1();
    const auto shards = shard(index, 3);
    const std::vector<const AssociationIndex*> ok{&shards[0], &shards[1], &shards[2]};
    const Selection sel{{cat(index, "c"), Polarity::Positive}};
    CHECK(scatter_gather(ok, sel) == evaluate(index, sel));
    const std::vector<const AssociationIndex*> missing{&shards[0], nullptr, &shards[2]};
    CHECK_THROWS_AS(scatter_gather(missing, sel), ShardError);
    const std::vector<const AssociationIndex*> gap{&shards[0], &shards[2]};
    CHECK_THROWS_AS(scatter_gather(gap, sel), ShardError);
}

TEST_CASE("typeahead") {
    Service s;
    s.load_names({"Ann", "Anne", "Nan", "Bob"});
    auto body = parse(s.handle_typeahead(R"({"typed":"an","mode":"pi"})"));
    CHECK(body["mode"] == "pi");
    CHECK(body["candidate_count"] == 3);
    CHECK(body["completed_count"] == 2);
    CHECK(body["rejected_keystrokes"] == 0);
    CHECK(body["exact_match"].is_null());

    body = parse(s.handle_typeahead(R"({"typed":"ann","mode":"pd"})"));
    CHECK(body["candidate_count"] == 2);
    CHECK(body["exact_match"] == 0);
    CHECK(body["items"][0] == json({{"id", 0}, {"name", "Ann"}, {"exact", true}}));
    CHECK(body["items"][1]["exact"] == false);

    body = parse(s.handle_typeahead(R"({"typed":"anz"})"));
    CHECK(body["rejected_keystrokes"] == 1);
    body = parse(s.handle_typeahead("{}"));
    CHECK(body["candidate_count"] == 4);
    CHECK(body["completed_count"].is_null());
    CHECK(s.handle_typeahead(R"({"mode":"sideways"})").status == 400);
}

TEST_CASE("http binding") {
    Service s;
    s.load(fig1(), 1);
    s.load_names({"Ann", "Nan"});
    HttpServer server(s);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);

    const std::string query = R"({"selection":[{"cat":"c"},{"cat":"a"}]})";
    auto res = client.Post("/query", query, "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == s.handle_query(query).body);
    CHECK(res->get_header_value("Content-Type").find("application/json") == 0);

    auto bad = client.Post("/query", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto meta = client.Get("/meta");
    REQUIRE(meta);
    CHECK(json::parse(meta->body)["N"] == 3);

    auto ta = client.Post("/typeahead", R"({"typed":"n","mode":"pd"})", "application/json");
    REQUIRE(ta);
    CHECK(json::parse(ta->body)["candidate_count"] == 1);

    server.stop();
    thread.join();
}
