#include <gtest/gtest.h>

#include <cstdlib>

#include "recnet/error.hpp"
#include "recnet/http.hpp"
#include "unit/support.hpp"

namespace recnet {
namespace {

using namespace std::chrono_literals;
using testing::FakeTransport;
using testing::no_sleep;

TEST(PostWithRetry, SucceedsFirstTime) {
  FakeTransport t;
  t.replies = {{200, "ok", {}}};
  EXPECT_EQ(post_with_retry(t, "/p", "{}", {}, no_sleep()).body, "ok");
}

TEST(PostWithRetry, RetriesServerErrorsWithExponentialBackoff) {
  FakeTransport t;
  t.replies = {{503, "", {}}, {0, "", {}}, {200, "fine", {}}};
  std::vector<std::chrono::milliseconds> waits;
  EXPECT_EQ(post_with_retry(t, "/p", "{}", {}, no_sleep(3, &waits)).body, "fine");
  EXPECT_EQ(waits, (std::vector<std::chrono::milliseconds>{100ms, 200ms}));
}

TEST(PostWithRetry, HonoursRetryAfter) {
  FakeTransport t;
  t.replies = {{429, "", {{"Retry-After", "2"}}}, {200, "ok", {}}};
  std::vector<std::chrono::milliseconds> waits;
  post_with_retry(t, "/p", "{}", {}, no_sleep(3, &waits));
  EXPECT_EQ(waits, (std::vector<std::chrono::milliseconds>{2000ms}));
}

TEST(PostWithRetry, ExhaustionReportsLastFailureKind) {
  FakeTransport limited;
  limited.replies = {{500, "", {}}, {429, "", {}}};
  try {
    post_with_retry(limited, "/p", "{}", {}, no_sleep(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
  }
  FakeTransport down;
  down.replies = {{0, "", {}}, {0, "", {}}, {502, "", {}}};
  try {
    post_with_retry(down, "/p", "{}", {}, no_sleep(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NetworkError);
  }
}

TEST(PostWithRetry, ClientErrorsAreNotRetried) {
  FakeTransport t;
  std::vector<FakeTransport::Request> log;
  t.log = &log;
  t.replies = {{400, "bad", {}}, {200, "never", {}}};
  EXPECT_THROW(post_with_retry(t, "/p", "{}", {}, no_sleep()), Error);
  EXPECT_EQ(log.size(), 1u);
}

TEST(EndpointConfig, CredentialResolution) {
  EndpointConfig e;
  EXPECT_EQ(e.resolve_credential(), "");
  e.credential_env = "RECNET_TEST_UNSET_CREDENTIAL";
  ::unsetenv("RECNET_TEST_UNSET_CREDENTIAL");
  try {
    e.resolve_credential();
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ConfigError);
  }
  ::setenv("RECNET_TEST_UNSET_CREDENTIAL", "sk-test", 1);
  EXPECT_EQ(e.resolve_credential(), "sk-test");
  ::unsetenv("RECNET_TEST_UNSET_CREDENTIAL");
}

TEST(HttpTransport, UnreachableHostIsNetworkError) {
  auto t = make_http_transport("http://127.0.0.1:1", std::chrono::seconds(1));
  try {
    t->post("/x", "{}", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NetworkError);
  }
}

}  // namespace
}  // namespace recnet
