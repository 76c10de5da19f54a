#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace recnet {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal POST-only transport so backends can be tested without sockets.
/// Implementations throw Error(NetworkError) when no response was obtained.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const HttpHeaders& headers) = 0;
};

// cpp-httplib backed transport. base_url like "http://host:port".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{250};
  // Injected so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// POST with up to max_attempts tries. Transport failures and 5xx back off
/// exponentially; 429 waits for Retry-After when present. Exhaustion throws
/// NetworkError (or RateLimited if the last reply was 429); other non-2xx
/// replies throw NetworkError immediately.
HttpResponse post_with_retry(HttpTransport& transport, const std::string& path,
                             const std::string& body, const HttpHeaders& headers,
                             const RetryPolicy& policy);

/// Endpoint settings shared by the remote embedder and the chat backend.
struct EndpointConfig {
  std::string base_url;
  std::string path;
  std::string model;
  // Name of the environment variable holding the bearer token; empty means
  // the endpoint needs no credential.
  std::string credential_env;
  int timeout_seconds = 60;

  // Reads credential_env. Throws Error(ConfigError) when it is named but unset.
  std::string resolve_credential() const;
};

}  // namespace recnet
