#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/routing.hpp"
#include "recnet/types.hpp"

namespace recnet::testing {

inline std::filesystem::path source_dir() { return RECNET_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) { return source_dir() / "fixtures" / rel; }

inline ClientAgent make_client(ClientId id, std::string profile, std::size_t buffer = 5) {
  ClientAgent c;
  c.id = std::move(id);
  c.profile = std::move(profile);
  c.attributes = mock_extract(c.profile);
  c.buffer = MessageBuffer(buffer);
  return c;
}

inline AttributeSet attrs(std::initializer_list<const char*> words) {
  AttributeSet out;
  for (const char* w : words) out.insert(Attribute::parse(w));
  return out;
}

inline RouterAgent make_router(RouterId id, const AttributeSet& a, const EmbeddingBackend& embedder) {
  RouterAgent r;
  r.id = id;
  r.attributes = a;
  r.profile = render_router_profile(a, 32);
  r.embedding = embedder.embed(r.profile);
  return r;
}

inline PropagatedMessage message(RouterId id, const AttributeSet& a) {
  PropagatedMessage m;
  m.router_id = id;
  m.router_attributes = a;
  m.router_profile = render_router_profile(a, 32);
  return m;
}

inline std::vector<std::string> texts(const AttributeSet& s) {
  std::vector<std::string> out;
  for (const auto& a : s) out.push_back(a.text());
  return out;
}

}  // namespace recnet::testing

#include <deque>
#include <functional>

#include "recnet/error.hpp"
#include "recnet/http.hpp"

namespace recnet::testing {

/// Scripted transport: each post pops the next reply; an empty status means
/// a transport failure. Requests are recorded for inspection.
class FakeTransport final : public HttpTransport {
 public:
  struct Request {
    std::string path;
    std::string body;
    HttpHeaders headers;
  };

  std::deque<HttpResponse> replies;
  // Used when replies runs dry; returns the reply for a request body.
  std::function<HttpResponse(const std::string& body)> responder;
  std::vector<Request>* log = nullptr;

  HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers) override {
    if (log) log->push_back({path, body, headers});
    if (replies.empty()) {
      if (responder) return responder(body);
      throw Error(ErrorCode::NetworkError, "no scripted reply");
    }
    HttpResponse r = replies.front();
    replies.pop_front();
    if (r.status == 0) throw Error(ErrorCode::NetworkError, "connection refused");
    return r;
  }
};

inline RetryPolicy no_sleep(int attempts = 3, std::vector<std::chrono::milliseconds>* waits = nullptr) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.base_delay = std::chrono::milliseconds(100);
  p.sleep = [waits](std::chrono::milliseconds d) {
    if (waits) waits->push_back(d);
  };
  return p;
}

}  // namespace recnet::testing
