#include "tie/service.hpp"

#include <algorithm>
#include <future>

#include "httplib.h"
#include "json.hpp"

namespace tie {

using ojson = nlohmann::ordered_json;

namespace {

struct RequestError {
    int status;
    std::string code;
    std::string message;
    std::string detail;
};

HttpResponse error_response(const RequestError& e) {
    ojson body;
    body["code"] = e.code;
    body["message"] = e.message;
    body["detail"] = e.detail;
    return {e.status, body.dump()};
}

nlohmann::json parse_body(std::string_view body) {
    if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return nlohmann::json::object();
    try {
        auto doc = nlohmann::json::parse(body);
        if (!doc.is_object()) throw RequestError{400, "malformed_body", "request body must be a JSON object", ""};
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw RequestError{400, "malformed_body", "request body is not valid JSON", e.what()};
    }
}

std::size_t paging_field(const nlohmann::json& doc, const char* key, std::size_t fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc[key];
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw RequestError{400, "malformed_body", std::string("\"") + key + "\" must be a non-negative integer", ""};
    }
    return v.get<std::size_t>();
}

}  // namespace

struct Service::State {
    AssociationIndex index;
    std::vector<AssociationIndex> shards;
    std::optional<FirstClickCache> cache;
    std::optional<AlphaIndex> alpha_pi;
    std::optional<AlphaIndex> alpha_pd;
    bool has_index = false;

    const std::string& item_name(ItemId global) const { return index.item_name(global); }

    QueryResult run(std::span<const SelectionEntry> selection) const {
        if (!shards.empty()) {
            std::vector<const AssociationIndex*> ptrs;
            for (const auto& s : shards) ptrs.push_back(&s);
            return scatter_gather(ptrs, selection);
        }
        if (selection.size() == 1 && selection[0].polarity == Polarity::Positive && cache) {
            return from_cache(selection[0].category);
        }
        return evaluate(index, selection);
    }

    QueryResult from_cache(CategoryId c) const {
        QueryResult r;
        if (c >= index.category_count()) throw QueryError("unknown category id " + std::to_string(c));
        auto p = index.postings(c);
        r.matching_items.assign(p.begin(), p.end());
        const auto row = first_click(*cache, index, c);
        auto it = row.begin();
        for (CategoryId k = 0; k < index.category_count(); ++k) {
            while (it != row.end() && it->category < k) ++it;
            const std::uint32_t count = (it != row.end() && it->category == k) ? it->count : 0;
            if (k == c) {
                r.selected.push_back({c, count});
            } else if (count > 0) {
                r.available.push_back({k, count});
            } else {
                r.unavailable.push_back(k);
            }
        }
        return r;
    }
};

QueryResult scatter_gather(std::span<const AssociationIndex* const> shards, std::span<const SelectionEntry> selection) {
    if (shards.empty()) throw ShardError("no shards");
    for (const auto* s : shards) {
        if (s == nullptr) throw ShardError("shard unavailable");
    }
    const auto& parent = shards.front()->parent_fingerprint();
    const std::size_t n = shards.front()->category_count();
    std::uint32_t next = 0;
    for (const auto* s : shards) {
        if (s->parent_fingerprint() != parent || s->category_count() != n) {
            throw ShardError("shards come from different indexes");
        }
        if (s->item_offset() != next) throw ShardError("shard item ranges are not contiguous");
        next += static_cast<std::uint32_t>(s->item_count());
    }

    std::vector<std::future<QueryResult>> pending;
    pending.reserve(shards.size());
    for (const auto* s : shards) {
        pending.push_back(std::async(std::launch::async, [s, selection] { return evaluate(*s, selection); }));
    }
    std::vector<QueryResult> parts;
    parts.reserve(shards.size());
    for (auto& f : pending) parts.push_back(f.get());

    QueryResult merged;
    std::vector<std::uint64_t> counts(n, 0);
    std::vector<bool> selected(n, false);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto offset = shards[k]->item_offset();
        for (ItemId j : parts[k].matching_items) merged.matching_items.push_back(offset + j);
        for (const auto& cc : parts[k].available) counts[cc.category] += cc.count;
        for (const auto& cc : parts[k].selected) counts[cc.category] += cc.count;
    }
    for (const auto& cc : parts.front().selected) {
        selected[cc.category] = true;
        merged.selected.push_back({cc.category, static_cast<std::uint32_t>(counts[cc.category])});
    }
    for (CategoryId c = 0; c < n; ++c) {
        if (selected[c]) continue;
        if (counts[c] > 0) {
            merged.available.push_back({c, static_cast<std::uint32_t>(counts[c])});
        } else {
            merged.unavailable.push_back(c);
        }
    }
    return merged;
}

std::shared_ptr<const Service::State> Service::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

void Service::load(AssociationIndex index, std::size_t shard_count) {
    auto next = std::make_shared<State>();
    if (auto prev = snapshot()) {
        next->alpha_pi = prev->alpha_pi;
        next->alpha_pd = prev->alpha_pd;
    }
    if (shard_count > 1) {
        next->shards = shard(index, shard_count);
    } else {
        next->cache = FirstClickCache::build(index);
    }
    next->index = std::move(index);
    next->has_index = true;
    std::lock_guard lock(mutex_);
    state_ = std::move(next);
}

void Service::load_names(std::vector<std::string> names) {
    auto next = std::make_shared<State>();
    if (auto prev = snapshot()) *next = *prev;
    next->alpha_pi = AlphaIndex::build(names, AlphaMode::PositionIndependent);
    next->alpha_pd = AlphaIndex::build(names, AlphaMode::PositionDependent);
    std::lock_guard lock(mutex_);
    state_ = std::move(next);
}

HttpResponse Service::handle_health() const { return {200, R"({"status":"ok"})"}; }

HttpResponse Service::handle_meta() const {
    const auto state = snapshot();
    if (!state || !state->has_index) {
        return error_response({503, "no_index", "no index loaded", ""});
    }
    const auto& index = state->index;
    const auto s = stats(index);
    ojson body;
    body["fingerprint"] = index.fingerprint();
    body["n"] = index.category_count();
    body["N"] = index.item_count();
    body["shards"] = std::max<std::size_t>(1, state->shards.size());
    ojson groups = ojson::array();
    for (GroupId g = 0; g < index.groups().size(); ++g) {
        const auto& info = index.groups()[g];
        ojson entry;
        entry["id"] = g;
        entry["name"] = info.name;
        entry["combinator"] = std::string(to_string(info.combinator));
        entry["categories"] = info.members;
        groups.push_back(std::move(entry));
    }
    body["groups"] = std::move(groups);
    ojson st;
    st["S"] = s.total_links;
    st["C_av"] = s.mean_categories_per_item;
    st["F_av"] = s.mean_items_per_category;
    st["sigma_C"] = s.sigma_categories_per_item;
    st["sigma_F"] = s.sigma_items_per_category;
    st["density"] = s.density;
    st["memory_estimate_bytes"] = s.memory_estimate_bytes;
    body["stats"] = std::move(st);
    body["typeahead"] = state->alpha_pi.has_value();
    return {200, body.dump()};
}

HttpResponse Service::handle_query(std::string_view raw) const {
    try {
        const auto state = snapshot();
        if (!state || !state->has_index) throw RequestError{503, "no_index", "no index loaded", ""};
        const auto& index = state->index;
        const auto doc = parse_body(raw);

        Selection selection;
        if (doc.contains("selection")) {
            if (!doc["selection"].is_array()) {
                throw RequestError{400, "malformed_body", "\"selection\" must be an array", ""};
            }
            for (const auto& entry : doc["selection"]) {
                if (!entry.is_object() || !entry.contains("cat")) {
                    throw RequestError{400, "malformed_body", "selection entries need \"cat\"", entry.dump()};
                }
                const auto& cat = entry["cat"];
                std::optional<CategoryId> id;
                if (cat.is_number_unsigned()) {
                    if (cat.get<std::uint64_t>() < index.category_count()) id = cat.get<CategoryId>();
                } else if (cat.is_string()) {
                    id = index.find_category(cat.get<std::string>());
                } else {
                    throw RequestError{400, "malformed_body", "\"cat\" must be a name or id", cat.dump()};
                }
                if (!id) throw RequestError{400, "unknown_category", "unknown category", cat.dump()};
                bool neg = false;
                if (entry.contains("neg")) {
                    if (!entry["neg"].is_boolean()) {
                        throw RequestError{400, "malformed_body", "\"neg\" must be a boolean", entry.dump()};
                    }
                    neg = entry["neg"].get<bool>();
                }
                selection.push_back({*id, neg ? Polarity::Negated : Polarity::Positive});
            }
        }
        const std::size_t offset = paging_field(doc, "offset", 0);
        const std::size_t limit = paging_field(doc, "limit", kDefaultLimit);

        QueryResult result;
        try {
            result = state->run(selection);
        } catch (const QueryError& e) {
            throw RequestError{400, "invalid_selection", e.what(), ""};
        }

        ojson body;
        body["fingerprint"] = index.parent_fingerprint();
        body["item_count"] = result.item_count();
        body["offset"] = offset;
        body["limit"] = limit;
        ojson items = ojson::array();
        for (std::size_t k = offset; k < result.matching_items.size() && k - offset < limit; ++k) {
            const ItemId j = result.matching_items[k];
            ojson item;
            item["id"] = j;
            item["name"] = state->item_name(j);
            items.push_back(std::move(item));
        }
        body["items"] = std::move(items);

        ojson echo = ojson::array();
        for (const auto& e : selection) {
            ojson entry;
            entry["id"] = e.category;
            entry["neg"] = e.polarity == Polarity::Negated;
            entry["count"] = result.count_of(e.category);
            echo.push_back(std::move(entry));
        }
        body["selection"] = std::move(echo);

        std::vector<ojson> per_group(index.groups().size(), ojson::array());
        for (const auto& cc : result.available) {
            ojson entry;
            entry["id"] = cc.category;
            entry["count"] = cc.count;
            per_group[index.group_of(cc.category)].push_back(std::move(entry));
        }
        ojson available = ojson::array();
        for (GroupId g = 0; g < per_group.size(); ++g) {
            if (per_group[g].empty()) continue;
            ojson entry;
            entry["group"] = index.groups()[g].name;
            entry["combinator"] = std::string(to_string(index.groups()[g].combinator));
            entry["categories"] = std::move(per_group[g]);
            available.push_back(std::move(entry));
        }
        body["available"] = std::move(available);
        body["unavailable"] = result.unavailable;
        ojson names = ojson::object();
        for (CategoryId c = 0; c < index.category_count(); ++c) names[std::to_string(c)] = index.category_name(c);
        body["names"] = std::move(names);
        return {200, body.dump()};
    } catch (const RequestError& e) {
        return error_response(e);
    } catch (const ShardError& e) {
        return error_response({503, "shard_unavailable", e.what(), ""});
    }
}

HttpResponse Service::handle_typeahead(std::string_view raw) const {
    try {
        const auto state = snapshot();
        if (!state || !state->alpha_pi) throw RequestError{503, "no_alpha_index", "no typeahead list loaded", ""};
        const auto doc = parse_body(raw);
        std::string typed;
        if (doc.contains("typed")) {
            if (!doc["typed"].is_string()) throw RequestError{400, "malformed_body", "\"typed\" must be a string", ""};
            typed = doc["typed"].get<std::string>();
        }
        AlphaMode mode = AlphaMode::PositionIndependent;
        if (doc.contains("mode")) {
            if (!doc["mode"].is_string()) throw RequestError{400, "malformed_body", "\"mode\" must be a string", ""};
            try {
                mode = parse_alpha_mode(doc["mode"].get<std::string>());
            } catch (const AlphaError& e) {
                throw RequestError{400, "malformed_body", e.what(), ""};
            }
        }
        const std::size_t offset = paging_field(doc, "offset", 0);
        const std::size_t limit = paging_field(doc, "limit", kDefaultLimit);
        const auto& alpha = mode == AlphaMode::PositionIndependent ? *state->alpha_pi : *state->alpha_pd;

        const auto run = type_string(alpha, typed);
        const auto exact = exact_match(alpha, run.state);
        ojson body;
        body["mode"] = std::string(to_string(mode));
        body["candidate_count"] = run.state.candidates.size();
        if (run.state.typed.empty()) {
            body["completed_count"] = nullptr;
        } else {
            body["completed_count"] = complete(alpha, run.state).size();
        }
        body["rejected_keystrokes"] = run.rejected_positions.size();
        body["exact_match"] = exact ? ojson(*exact) : ojson(nullptr);
        ojson items = ojson::array();
        const auto& cands = run.state.candidates;
        for (std::size_t k = offset; k < cands.size() && k - offset < limit; ++k) {
            ojson item;
            item["id"] = cands[k];
            item["name"] = alpha.name(cands[k]);
            item["exact"] = exact && *exact == cands[k];
            items.push_back(std::move(item));
        }
        body["items"] = std::move(items);
        return {200, body.dump()};
    } catch (const RequestError& e) {
        return error_response(e);
    }
}

struct HttpServer::Impl {
    explicit Impl(const Service& s) : service(s) {}
    const Service& service;
    httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto reply = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    auto& svc = impl_->service;
    impl_->server.Get("/meta", [&svc, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, svc.handle_meta());
    });
    impl_->server.Get("/healthz", [&svc, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, svc.handle_health());
    });
    impl_->server.Post("/query", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.handle_query(req.body));
    });
    impl_->server.Post("/typeahead", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.handle_typeahead(req.body));
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace tie
