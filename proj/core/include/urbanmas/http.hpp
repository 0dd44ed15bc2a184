#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace urbanmas {

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type = "application/json";
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  /// 0 when the request never produced an HTTP status (DNS, connect, TLS...).
  int status = 0;
  std::string body;
  std::string error;

  bool transport_failed() const noexcept { return status == 0; }
};

/// Every network access in the library goes through this seam, so tests can
/// substitute counting or failing doubles.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_default_transport();

struct ParsedUrl {
  std::string scheme_host_port;  // "https://example.org:8443"
  std::string path_and_query;    // "/v1/chat/completions?x=1"
};

/// Splits an absolute http(s) URL; throws Error(InvalidArgument) otherwise.
ParsedUrl split_url(const std::string& url);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view s);

}  // namespace urbanmas
