#include "actx/remote_executor.hpp"

#include "httplib.h"
#include "json.hpp"

#include "actx/executor.hpp"

namespace actx {

std::string encode_request(const RemoteRequest& r) {
  return nlohmann::json{{"instruction", r.instruction}, {"memory", r.memory}, {"observation", r.observation}}.dump();
}

RemoteRequest decode_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return RemoteRequest{j.at("instruction").get<std::string>(), j.at("memory").get<std::string>(),
                         j.at("observation").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw ExecutorError(std::string("malformed executor request: ") + e.what());
  }
}

std::string encode_response(const EnvAction& action) {
  return nlohmann::json{{"action", format_action(action)}}.dump();
}

EnvAction decode_response(const std::string& body) {
  try {
    return parse_action(nlohmann::json::parse(body).at("action").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ExecutorError(std::string("malformed executor response: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ExecutorError(std::string("malformed executor action: ") + e.what());
  }
}

namespace {

class HttpTransport final : public RemoteTransport {
 public:
  explicit HttpTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::string exchange(const std::string& request_body) override {
    httplib::Client client(endpoint_.host, endpoint_.port);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    auto res = client.Post(endpoint_.path, request_body, "application/json");
    if (!res) {
      throw ExecutorTransportError("executor request to " + endpoint_.host + ":" + std::to_string(endpoint_.port) +
                                   " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ExecutorTransportError("executor returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace

std::unique_ptr<RemoteTransport> make_http_transport(HttpEndpoint endpoint) {
  return std::make_unique<HttpTransport>(std::move(endpoint));
}

RemoteClient::RemoteClient(std::unique_ptr<RemoteTransport> transport, RemoteOptions options)
    : transport_(std::move(transport)), options_(options), slots_(std::max(1, options.max_in_flight)) {
  if (!transport_) throw std::invalid_argument("RemoteClient requires a transport");
  if (options_.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

EnvAction RemoteClient::request(const RemoteRequest& request) {
  const std::string body = encode_request(request);
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    std::string reply;
    slots_.acquire();
    try {
      reply = transport_->exchange(body);
    } catch (const ExecutorTransportError& e) {
      slots_.release();
      last_error = e.what();
      continue;
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();
    return decode_response(reply);
  }
  throw ExecutorTransportError("executor unavailable after " + std::to_string(options_.retries + 1) +
                               " attempts: " + last_error);
}

}  // namespace actx
