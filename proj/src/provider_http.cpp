#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "flowgeom/errors.hpp"
#include "flowgeom/provider.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace flowgeom {

EndpointError::EndpointError(int status, const std::string& body_excerpt, std::ptrdiff_t failed_index)
    : ProviderError("embedding endpoint failed with status " + std::to_string(status) + ": " + body_excerpt,
                    failed_index),
      status_(status) {}

namespace {

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("endpoint must be an absolute URL: " + cfg_.endpoint);
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    base_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (cfg_.endpoint.rfind("https://", 0) == 0) throw InvalidArgument("built without TLS support: " + cfg_.endpoint);
#endif
}

std::string HttpProvider::id() const { return "http:" + cfg_.model + "@" + base_ + path_; }

std::vector<Eigen::VectorXd> HttpProvider::request_batch(const std::vector<std::string>& texts,
                                                         std::size_t offset) const {
    const auto failed = static_cast<std::ptrdiff_t>(offset);
    nlohmann::json request{{"model", cfg_.model}, {"input", texts}};
    const std::string body = request.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(base_);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    // Jitter is seeded from the batch offset so retry timing is reproducible.
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ offset);
    std::uniform_real_distribution<double> jitter(0.8, 1.2);

    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= cfg_.retry_budget; ++attempt) {
        if (attempt > 0) {
            const double delay = cfg_.backoff_base_seconds * std::pow(2.0, attempt - 1) * jitter(rng);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_status = 0;
            last_body = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception&) {
                throw EndpointError(res->status, "response is not JSON: " + excerpt(res->body), failed);
            }
            const auto data = parsed.find("data");
            if (data == parsed.end() || !data->is_array() || data->size() != texts.size()) {
                throw EndpointError(res->status, "response lacks one data entry per input", failed);
            }
            std::vector<Eigen::VectorXd> out(texts.size());
            std::vector<bool> filled(texts.size(), false);
            for (std::size_t k = 0; k < data->size(); ++k) {
                const auto& item = (*data)[k];
                const std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : k;
                if (idx >= texts.size() || filled[idx]) {
                    throw EndpointError(res->status, "bad or repeated index in response", failed);
                }
                const auto& emb = item.at("embedding");
                Eigen::VectorXd v(static_cast<Eigen::Index>(emb.size()));
                for (std::size_t j = 0; j < emb.size(); ++j) v[static_cast<Eigen::Index>(j)] = emb[j].get<double>();
                out[idx] = std::move(v);
                filled[idx] = true;
            }
            return out;
        }
        last_status = res->status;
        last_body = res->body;
        if (!retryable(res->status)) break;
    }
    throw EndpointError(last_status, excerpt(last_body), failed);
}

std::vector<Eigen::VectorXd> HttpProvider::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) throw InvalidArgument("embed_batch: no texts");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) throw InvalidArgument("embed_batch: text " + std::to_string(i) + " is empty");
    }
    const std::size_t n_batches = (texts.size() + cfg_.max_batch - 1) / cfg_.max_batch;
    std::vector<std::vector<Eigen::VectorXd>> results(n_batches);
    std::vector<std::exception_ptr> errors(n_batches);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t b = next++; b < n_batches; b = next++) {
            const std::size_t lo = b * cfg_.max_batch;
            const std::size_t hi = std::min(texts.size(), lo + cfg_.max_batch);
            try {
                results[b] = request_batch(std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                                                    texts.begin() + static_cast<std::ptrdiff_t>(hi)),
                                           lo);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::min(cfg_.max_parallel, n_batches);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Earliest failing batch wins so the reported index is deterministic.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (auto& batch : results) {
        for (auto& v : batch) {
            if (!out.empty() && v.size() != out.front().size()) {
                throw DimensionMismatch(static_cast<std::size_t>(out.front().size()), static_cast<std::size_t>(v.size()));
            }
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace flowgeom
