// Copyright 2026 The m4d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "m4d/server.hpp"

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "m4d/error.hpp"
#include "m4d/session.hpp"

namespace m4d {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

// Frames are skipped rather than queued once a slow client falls this far behind.
constexpr std::size_t kMaxQueuedMessages = 16;

struct Shared {
  std::shared_ptr<const ModelRegistry> registry;
  std::shared_ptr<const LandmarkSequence> sequence;
  FitConfig fit;
  std::filesystem::path static_dir;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, const Shared& shared)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        session_(shared.registry, shared.sequence, shared.fit) {}

  void start(http::request<http::string_body> request) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        return;
      }
      self->send(self->session_.hello());
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) {
        continue;
      }
      for (const auto& reply : session_.handle_text(line)) {
        send(reply);
      }
    }
    schedule_playback();
    read();
  }

  void send(const nlohmann::json& message) {
    outbox_.push_back(message.dump() + "\n");
    if (!writing_) {
      write();
    }
  }

  void write() {
    writing_ = true;
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->timer_.cancel();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (self->outbox_.empty()) {
                        self->writing_ = false;
                      } else {
                        self->write();
                      }
                    });
  }

  void schedule_playback() {
    if (session_.playing() && !timer_armed_ && !closed_) {
      next_frame_ = Clock::now();
      arm();
    }
  }

  void arm() {
    timer_armed_ = true;
    timer_.expires_at(next_frame_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) { self->on_tick(ec); });
  }

  void on_tick(beast::error_code ec) {
    timer_armed_ = false;
    if (ec || closed_ || !session_.playing()) {
      return;
    }
    if (outbox_.size() < kMaxQueuedMessages) {
      send(session_.emit_frame());
    }
    const auto interval = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(session_.frame_interval_seconds()));
    next_frame_ += interval;
    const auto now = Clock::now();
    if (next_frame_ + interval < now) {
      next_frame_ = now;
    }
    if (session_.playing()) {
      arm();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  Session session_;
  std::deque<std::string> outbox_;
  Clock::time_point next_frame_{};
  bool writing_ = false;
  bool timer_armed_ = false;
  bool closed_ = false;
};

std::string_view mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, const Shared& shared)
      : stream_(std::move(socket)), shared_(shared) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) {
                         self->on_request();
                       }
                     });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(request_)) {
      std::make_shared<WsConnection>(stream_.release_socket(), shared_)->start(std::move(request_));
      return;
    }
    auto response = std::make_shared<http::response<http::string_body>>(respond());
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  http::response<http::string_body> respond() const {
    http::response<http::string_body> res;
    res.version(request_.version());
    res.keep_alive(false);
    res.set(http::field::server, "m4d");
    const std::string target(request_.target());
    if (request_.method() != http::verb::get) {
      res.result(http::status::method_not_allowed);
    } else if (shared_.static_dir.empty()) {
      if (target == "/") {
        res.result(http::status::ok);
        res.set(http::field::content_type, "text/plain");
        res.body() = "m4d session server: connect with a WebSocket client\n";
      } else {
        res.result(http::status::not_found);
      }
    } else {
      const std::string relative = target == "/" ? "index.html" : target.substr(1);
      const std::filesystem::path path = shared_.static_dir / relative;
      std::ifstream file(path, std::ios::binary);
      if (relative.find("..") != std::string::npos || !file) {
        res.result(http::status::not_found);
      } else {
        res.result(http::status::ok);
        res.set(http::field::content_type, std::string(mime_type(path)));
        res.body().assign(std::istreambuf_iterator<char>(file), {});
      }
    }
    res.prepare_payload();
    return res;
  }

  beast::tcp_stream stream_;
  const Shared& shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

struct Server::Impl {
  Shared shared;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::signal_set signals{ioc};

  void accept() {
    acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) {
          return;
        }
      } else {
        std::make_shared<HttpConnection>(std::move(socket), shared)->start();
      }
      accept();
    });
  }
};

Server::Server(ServerConfig config, std::shared_ptr<const ModelRegistry> registry,
               std::shared_ptr<const LandmarkSequence> sequence)
    : impl_(std::make_unique<Impl>()) {
  if (!registry || !registry->contains("global")) {
    throw InvalidConfig("server needs a registry with a 'global' model");
  }
  validate_fit_config(config.fit);
  impl_->shared = {std::move(registry), std::move(sequence), config.fit, config.static_dir};
  // Sessions start on the global model, so fail early rather than per connection.
  Session probe(impl_->shared.registry, impl_->shared.sequence, config.fit);

  beast::error_code ec;
  const auto address = net::ip::make_address(config.address, ec);
  if (ec) {
    throw InvalidConfig("bad listen address '" + config.address + "'");
  }
  const tcp::endpoint endpoint(address, config.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error("cannot listen on " + config.address + ":" + std::to_string(config.port) + ": " +
                ec.message());
  }
  impl_->accept();
  if (config.handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) {
        stop();
      }
    });
  }
}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() { impl_->ioc.run(); }

void Server::stop() { impl_->ioc.stop(); }

std::uint16_t port_from_env(std::uint16_t fallback) {
  const char* value = std::getenv("M4D_PORT");
  if (value == nullptr || *value == '\0') {
    return fallback;
  }
  char* end = nullptr;
  const long port = std::strtol(value, &end, 10);
  if (*end != '\0' || port < 1 || port > 65535) {
    throw InvalidConfig(std::string("M4D_PORT is not a valid port: ") + value);
  }
  return static_cast<std::uint16_t>(port);
}

}  // namespace m4d
