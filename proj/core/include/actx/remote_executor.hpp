#pragma once

// Remote executor adapter. Wire contract, JSON over HTTP POST:
//   request  {"instruction": text, "memory": text, "observation": text}
//   response {"action": text}   e.g. "navigate 17", "answer 1003,1007"

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "actx/env.hpp"

namespace actx {

struct RemoteRequest {
  std::string instruction;
  std::string memory;
  std::string observation;
};

std::string encode_request(const RemoteRequest& request);
RemoteRequest decode_request(const std::string& body);
std::string encode_response(const EnvAction& action);
// Throws ExecutorError on a malformed body or action text.
EnvAction decode_response(const std::string& body);

// One request/response exchange. Implementations throw
// ExecutorTransportError on failure.
class RemoteTransport {
 public:
  virtual ~RemoteTransport() = default;
  virtual std::string exchange(const std::string& request_body) = 0;
};

struct HttpEndpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/act";
  std::chrono::seconds timeout{60};
};

std::unique_ptr<RemoteTransport> make_http_transport(HttpEndpoint endpoint);

struct RemoteOptions {
  int retries = 2;
  int max_in_flight = 4;
};

// Bounds concurrent in-flight requests and retries transport failures.
class RemoteClient {
 public:
  RemoteClient(std::unique_ptr<RemoteTransport> transport, RemoteOptions options = {});

  EnvAction request(const RemoteRequest& request);

  const RemoteOptions& options() const { return options_; }

 private:
  std::unique_ptr<RemoteTransport> transport_;
  RemoteOptions options_;
  std::counting_semaphore<> slots_;
};

}  // namespace actx
