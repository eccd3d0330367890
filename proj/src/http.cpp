#include "kgte/http.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "kgte/error.hpp"

namespace kgte {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "URL lacks a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttplibTransport::HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::post_json(const std::string& url, const std::string& body,
                                         const std::map<std::string, std::string>& headers) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto result = client.Post(parts.path, h, body, "application/json");
    if (!result) {
        throw RemoteError(ErrorCode::Transport, 0,
                          "POST " + url + " failed: " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
}

HttpResponse post_with_retry(HttpTransport& transport, const std::string& url, const std::string& body,
                             const std::map<std::string, std::string>& headers,
                             const RetryPolicy& policy,
                             const std::function<void(std::chrono::milliseconds)>& sleep) {
    auto backoff = policy.initial_backoff;
    for (std::size_t attempt = 0;; ++attempt) {
        const bool last = attempt >= policy.max_retries;
        try {
            auto response = transport.post_json(url, body, headers);
            if (response.status >= 200 && response.status < 300) return response;
            const std::string excerpt = response.body.substr(0, 200);
            if (!retryable_status(response.status)) {
                throw RemoteError(ErrorCode::Api, response.status,
                                  "HTTP " + std::to_string(response.status) + ": " + excerpt);
            }
            if (last) {
                throw RemoteError(ErrorCode::Transport, response.status,
                                  "HTTP " + std::to_string(response.status) + " after " +
                                      std::to_string(attempt + 1) + " attempts: " + excerpt);
            }
        } catch (const RemoteError& e) {
            if (!e.retryable() || last) throw;
        }
        if (sleep) {
            sleep(backoff);
        } else {
            std::this_thread::sleep_for(backoff);
        }
        backoff = std::chrono::milliseconds(
            static_cast<std::chrono::milliseconds::rep>(static_cast<double>(backoff.count()) * policy.backoff_factor));
    }
}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

std::string env_or_empty(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
}

}  // namespace kgte
