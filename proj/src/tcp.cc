// Copyright 2026 The Cloudlet ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cits/tcp.h"
#include "cits/error.h"
#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace cits::net {
namespace {

using nlohmann::json;

[[noreturn]] void ConnectionFail(std::string const& what) {
  throw Error(ErrorCode::kConnectionError, what + ": " + std::strerror(errno));
}

json ErrorFrame(ErrorCode code, std::string const& message) {
  return {{"error", ToString(code)}, {"message", message}};
}

std::vector<std::string> ToList(std::set<std::string> const& s) { return {s.begin(), s.end()}; }

}  // namespace

FrameStream::~FrameStream() {
  if (fd_ >= 0) ::close(fd_);
}

void FrameStream::Shutdown() { ::shutdown(fd_, SHUT_RDWR); }

bool FrameStream::Send(json const& frame) {
  auto text = frame.dump() + "\n";
  std::lock_guard lock(write_mu_);
  std::size_t sent = 0;
  while (sent < text.size()) {
    auto n = ::send(fd_, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += std::size_t(n);
  }
  return true;
}

std::optional<json> FrameStream::Receive(int timeout_ms) {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      auto line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty() || line == "\r") continue;
      try {
        return json::parse(line);
      } catch (json::exception const& e) {
        return ErrorFrame(ErrorCode::kMalformedMessage, e.what());
      }
    }
    pollfd pfd{fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) closed_ = true;
    if (ready <= 0) return std::nullopt;
    char chunk[4096];
    auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      closed_ = true;
      return std::nullopt;
    }
    buffer_.append(chunk, std::size_t(n));
  }
}

BrokerServer::BrokerServer() = default;

BrokerServer::~BrokerServer() { Stop(); }

void BrokerServer::Attach(broker::Broker& broker, geo::GeoAssociator* geo) {
  broker_ = &broker;
  geo_ = geo;
}

void BrokerServer::OnDelivery(broker::Delivery const& d) {
  std::shared_ptr<FrameStream> stream;
  {
    std::lock_guard lock(mu_);
    auto it = by_name_.find(d.recipient);
    if (it == by_name_.end()) return;
    stream = it->second;
  }
  stream->Send({{"topic", d.topic}, {"payload", d.payload}});
}

void BrokerServer::Start(std::string const& host, std::uint16_t port) {
  if (!broker_) throw Error(ErrorCode::kInvalidArgument, "no broker attached");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) ConnectionFail("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::kConnectionError, "bad listen address " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ConnectionFail("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(listen_fd_, 64) < 0) ConnectionFail("listen");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { AcceptLoop(); });
}

void BrokerServer::Stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto& s : streams_) s->Shutdown();
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  std::lock_guard lock(mu_);
  streams_.clear();
  by_name_.clear();
}

void BrokerServer::AcceptLoop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto stream = std::make_shared<FrameStream>(fd);
    std::lock_guard lock(mu_);
    if (!running_) {
      stream->Shutdown();
      break;
    }
    streams_.push_back(stream);
    workers_.emplace_back([this, stream] { Serve(stream); });
  }
}

void BrokerServer::Serve(std::shared_ptr<FrameStream> stream) {
  std::string name;
  while (running_) {
    auto frame = stream->Receive(200);
    if (!frame) {
      if (stream->closed()) break;
      continue;
    }
    bool was_anonymous = name.empty();
    auto reply = Handle(name, *frame);
    if (was_anonymous && !name.empty()) {
      std::lock_guard lock(mu_);
      by_name_[name] = stream;
    }
    if (!stream->Send(reply)) break;
  }
  if (!name.empty()) {
    std::lock_guard lock(mu_);
    auto it = by_name_.find(name);
    if (it != by_name_.end() && it->second == stream) by_name_.erase(it);
  }
}

json BrokerServer::Reassociate(std::string const& name, geo::LatLon p) {
  std::lock_guard lock(geo_mu_);
  if (!geo_->HasVehicle(name)) geo_->AddVehicle(name);
  auto delta = geo_->UpdatePosition(name, p);
  for (auto const& c : delta.left) broker_->Leave(name, c);
  std::vector<std::string> refused;
  for (auto const& c : delta.joined) {
    try {
      broker_->Join(name, c);
    } catch (Error const& e) {
      if (e.code() != ErrorCode::kCapacityExceeded) throw;
      refused.push_back(c);
    }
  }
  return {{"ok", true},
          {"joined", ToList(delta.joined)},
          {"left", ToList(delta.left)},
          {"refused", refused},
          {"coverage_gap", delta.coverage_gap}};
}

json BrokerServer::Handle(std::string& name, json const& frame) {
  try {
    if (!frame.is_object()) {
      return ErrorFrame(ErrorCode::kMalformedMessage, "frames are JSON objects");
    }
    if (frame.contains("error")) return frame;
    if (name.empty()) {
      if (!frame.contains("connect") || !frame["connect"].is_string()) {
        return ErrorFrame(ErrorCode::kMalformedMessage, "first frame must be {\"connect\": name}");
      }
      auto who = frame["connect"].get<std::string>();
      auto& controller = broker_->controller();
      auto reg = controller.Find(who);
      json reply = {{"ok", true}, {"connected", who}};
      if (!reg) {
        if (!frame.contains("type")) {
          return ErrorFrame(ErrorCode::kNotRegistered, who + " is not registered");
        }
        reg = controller.Register(who, frame.value("type", ""));
        reply["token"] = reg->token;
      } else if (frame.contains("token") && frame["token"] != reg->token) {
        return ErrorFrame(ErrorCode::kUnauthorized, "token mismatch for " + who);
      }
      name = who;
      return reply;
    }
    if (frame.contains("join")) {
      broker_->Join(name, frame["join"].get<std::string>());
      return {{"ok", true}};
    }
    if (frame.contains("leave")) {
      broker_->Leave(name, frame["leave"].get<std::string>());
      return {{"ok", true}};
    }
    if (frame.contains("subscribe")) {
      auto topic = frame["subscribe"].get<std::string>();
      auto cloudlets = broker_->MembershipsOf(name);
      if (cloudlets.empty()) throw Error(ErrorCode::kNotMember, name + " has no cloudlet");
      for (auto const& c : cloudlets) broker_->Subscribe(name, c, topic);
      return {{"ok", true}, {"cloudlets", cloudlets}};
    }
    if (frame.contains("topic")) {
      auto topic = frame["topic"].get<std::string>();
      auto const& payload = frame.contains("payload") ? frame["payload"] : json(nullptr);
      if (topic == alerts::kRogueTopic) {
        // An optional "cloudlets" list narrows the update to those cloudlets.
        auto command = payload;
        std::vector<std::string> targets;
        if (command.is_object() && command.contains("cloudlets")) {
          targets = command["cloudlets"].get<std::vector<std::string>>();
          command.erase("cloudlets");
        }
        return {{"ok", true}, {"response", broker_->UpdateRogues(name, command, targets)}};
      }
      if (topic != broker::ShadowTopic(name)) {
        throw Error(ErrorCode::kUnauthorized, name + " may not publish on " + topic);
      }
      auto reported = payload.is_object() && payload.contains("state") &&
                              payload["state"].is_object()
                          ? payload["state"].value("reported", json::object())
                          : json::object();
      if (geo_ && reported.is_object() && !reported.contains("Time")) {
        return Reassociate(name, geo::PositionFromShadow(payload));
      }
      json results = json::array();
      for (auto const& r : broker_->Publish(name, topic, payload)) {
        results.push_back({{"id", r.message_id},
                           {"cloudlet", r.cloudlet},
                           {"outcome", broker::ToString(r.outcome)},
                           {"decision", alerts::ToString(r.decision.kind)},
                           {"reason", r.reason},
                           {"deliveries", r.deliveries.size()}});
      }
      return {{"ok", true}, {"results", results}};
    }
    return ErrorFrame(ErrorCode::kMalformedMessage, "unrecognized frame");
  } catch (Error const& e) {
    return ErrorFrame(e.code(), e.what());
  } catch (json::exception const& e) {
    return ErrorFrame(ErrorCode::kMalformedMessage, e.what());
  }
}

BrokerClient::BrokerClient(std::string const& host, std::uint16_t port, std::string const& name,
                           std::string const& type, std::string const& token) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kConnectionError, "cannot resolve " + host);
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    ConnectionFail("socket");
  }
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    ::close(fd);
    ConnectionFail("connect " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  stream_ = std::make_unique<FrameStream>(fd);
  json hello = {{"connect", name}};
  if (!type.empty()) hello["type"] = type;
  if (!token.empty()) hello["token"] = token;
  hello_ = Request(hello);
}

json BrokerClient::Request(json const& frame, int timeout_ms) {
  if (!stream_->Send(frame)) throw Error(ErrorCode::kConnectionError, "connection closed");
  for (;;) {
    auto reply = stream_->Receive(timeout_ms);
    if (!reply) throw Error(ErrorCode::kConnectionError, "no reply from broker");
    if (reply->contains("topic") && !reply->contains("ok")) {
      deliveries_.push_back(std::move(*reply));
      continue;
    }
    if (reply->contains("error")) {
      auto code = ErrorCodeFromString((*reply)["error"].get<std::string>())
                      .value_or(ErrorCode::kConnectionError);
      throw Error(code, reply->value("message", "broker error"));
    }
    return *reply;
  }
}

json BrokerClient::Publish(std::string const& topic, json const& payload) {
  return Request({{"topic", topic}, {"payload", payload}});
}

void BrokerClient::Subscribe(std::string const& topic) { Request({{"subscribe", topic}}); }

void BrokerClient::Join(std::string const& cloudlet) { Request({{"join", cloudlet}}); }

std::optional<json> BrokerClient::NextDelivery(int timeout_ms) {
  if (!deliveries_.empty()) {
    auto d = std::move(deliveries_.front());
    deliveries_.pop_front();
    return d;
  }
  return stream_->Receive(timeout_ms);
}

std::pair<std::string, std::uint16_t> ParseAddress(std::string const& addr) {
  auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty()) host = "127.0.0.1";
  try {
    std::size_t used = 0;
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    return {host, std::uint16_t(p)};
  } catch (std::exception const&) {
    throw Error(ErrorCode::kInvalidArgument, "bad address " + addr);
  }
}

}  // namespace cits::net
