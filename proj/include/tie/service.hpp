#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tie/alpha.hpp"
#include "tie/association_index.hpp"
#include "tie/query.hpp"

namespace tie {

class ShardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluates `selection` on every shard and merges: item lists concatenated in
/// shard order (global IDs), per-category counts summed. A null shard fails
/// the whole request.
QueryResult scatter_gather(std::span<const AssociationIndex* const> shards, std::span<const SelectionEntry> selection);

struct HttpResponse {
    int status = 200;
    std::string body;
};

/// Stateless JSON request handlers over an immutable index (optionally split
/// into shards) and optional typeahead name lists.
class Service {
public:
    Service() = default;

    /// Replaces the served index. shard_count > 1 answers queries by scatter-gather.
    void load(AssociationIndex index, std::size_t shard_count = 1);
    void load_names(std::vector<std::string> names);

    HttpResponse handle_meta() const;
    HttpResponse handle_query(std::string_view body) const;
    HttpResponse handle_typeahead(std::string_view body) const;
    HttpResponse handle_health() const;

    static constexpr std::size_t kDefaultLimit = 50;

private:
    struct State;
    std::shared_ptr<const State> snapshot() const;

    mutable std::mutex mutex_;
    std::shared_ptr<const State> state_;
};

/// HTTP binding: GET /meta, POST /query, POST /typeahead, GET /healthz.
class HttpServer {
public:
    explicit HttpServer(const Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and returns the port (pass 0 for an ephemeral one).
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tie
