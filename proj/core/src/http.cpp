#include "recnet/http.hpp"

#include <cstdlib>
#include <optional>
#include <thread>

#include <httplib.h>

#include "recnet/error.hpp"

namespace recnet {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout)
      : client_(base_url) {
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
    client_.set_write_timeout(timeout);
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const HttpHeaders& headers) override {
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client_.Post(path, h, body, "application/json");
    if (!res) {
      throw Error(ErrorCode::NetworkError, "POST " + path + ": " + httplib::to_string(res.error()));
    }
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) out.headers[k] = v;
    return out;
  }

 private:
  httplib::Client client_;
};

std::chrono::milliseconds retry_after(const HttpResponse& res, std::chrono::milliseconds fallback) {
  for (const auto& [k, v] : res.headers) {
    if (k.size() != 11) continue;
    std::string lower;
    for (char c : k) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower != "retry-after") continue;
    char* end = nullptr;
    const double seconds = std::strtod(v.c_str(), &end);
    if (end != v.c_str() && seconds >= 0.0) {
      return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
    }
  }
  return fallback;
}

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

HttpResponse post_with_retry(HttpTransport& transport, const std::string& path,
                             const std::string& body, const HttpHeaders& headers,
                             const RetryPolicy& policy) {
  std::function<void(std::chrono::milliseconds)> sleep = policy.sleep;
  if (!sleep) sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::string last_failure = "no attempt made";
  bool last_was_rate_limit = false;
  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    const auto backoff = policy.base_delay * (1LL << (attempt - 1));
    std::chrono::milliseconds wait = backoff;
    std::optional<HttpResponse> res;
    try {
      res = transport.post(path, body, headers);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NetworkError) throw;
      last_was_rate_limit = false;
      last_failure = e.what();
    }
    if (res) {
      if (res->status >= 200 && res->status < 300) return *std::move(res);
      if (res->status == 429) {
        last_was_rate_limit = true;
        wait = retry_after(*res, backoff);
        last_failure = "HTTP 429";
      } else if (res->status >= 500) {
        last_was_rate_limit = false;
        last_failure = "HTTP " + std::to_string(res->status);
      } else {
        throw Error(ErrorCode::NetworkError, "POST " + path + " returned HTTP " +
                                                 std::to_string(res->status) + ": " + res->body);
      }
    }
    if (attempt < policy.max_attempts) sleep(wait);
  }
  throw Error(last_was_rate_limit ? ErrorCode::RateLimited : ErrorCode::NetworkError,
              "POST " + path + " failed after " + std::to_string(policy.max_attempts) +
                  " attempts: " + last_failure);
}

std::string EndpointConfig::resolve_credential() const {
  if (credential_env.empty()) return {};
  const char* value = std::getenv(credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::ConfigError,
                "credential environment variable '" + credential_env + "' is not set");
  }
  return value;
}

}  // namespace recnet
