#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <condition_variable>
#include <string>

namespace kgte {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal POST-JSON transport. Implementations throw RemoteError with
/// ErrorCode::Transport for connection faults and timeouts.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                   const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib backed transport. `url` is absolute: scheme://host[:port]/path.
class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::seconds(60));
    HttpResponse post_json(const std::string& url, const std::string& body,
                           const std::map<std::string, std::string>& headers) override;

private:
    std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_factor = 2.0;
};

/// POST and decode the status: 2xx returns, 408/429/5xx and transport faults
/// are retried with exponential backoff, other statuses throw
/// Error{Api} with the status and a body excerpt. Exhausted retries
/// rethrow the last transport error. `sleep` is injectable for tests.
HttpResponse post_with_retry(
    HttpTransport& transport, const std::string& url, const std::string& body,
    const std::map<std::string, std::string>& headers, const RetryPolicy& policy,
    const std::function<void(std::chrono::milliseconds)>& sleep = {});

/// Counting gate bounding concurrent in-flight remote requests.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t bound) : available_(bound == 0 ? 1 : bound) {}

    class Slot {
    public:
        explicit Slot(InFlightLimiter& owner) : owner_(owner) { owner_.acquire(); }
        ~Slot() { owner_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        InFlightLimiter& owner_;
    };

    Slot acquire_slot() { return Slot(*this); }

private:
    void acquire();
    void release();

    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t available_;
};

/// Read an environment variable, empty string when unset.
std::string env_or_empty(const std::string& name);

}  // namespace kgte
