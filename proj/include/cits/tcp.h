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

#ifndef CITS_TCP_H
#define CITS_TCP_H

#include "cits/broker.h"
#include "cits/geo.h"
#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace cits::net {

/// One newline-delimited JSON stream over a socket. Writes are serialized;
/// reads are for a single reader.
class FrameStream {
 public:
  explicit FrameStream(int fd) : fd_(fd) {}
  ~FrameStream();
  FrameStream(FrameStream const&) = delete;
  FrameStream& operator=(FrameStream const&) = delete;

  /// False once the peer is gone.
  bool Send(nlohmann::json const& frame);
  /// Next frame, or nullopt on EOF, error or timeout (negative waits forever).
  /// Lines that are not JSON come back as {"error": "MalformedMessage"}.
  std::optional<nlohmann::json> Receive(int timeout_ms = -1);
  void Shutdown();
  /// True once the peer closed the stream or a read failed.
  bool closed() const { return closed_; }

 private:
  int fd_;
  bool closed_ = false;
  std::mutex write_mu_;
  std::string buffer_;
};

/// Serves a broker over TCP. Frames from a client:
///
///   {"connect": name, "type": t?, "token": tok?}   first frame; registers
///                                                   unknown names when a
///                                                   type is given
///   {"join": cloudlet} / {"leave": cloudlet}
///   {"subscribe": topic}                            in every joined cloudlet
///   {"topic": t, "payload": p}                      publish
///
/// A rogue command payload may carry "cloudlets": [...] to limit the update
/// to those cloudlets.
///
/// Publishing a position-only report on the shadow topic reassociates the
/// vehicle through the geo associator; any other shadow payload runs the
/// cloudlet pipelines. Each request gets {"ok": true, ...} or
/// {"error": code, "message": text}; deliveries arrive as
/// {"topic": t, "payload": notification}.
class BrokerServer {
 public:
  BrokerServer();
  ~BrokerServer();

  /// Must be called before Start(). `geo` may be null.
  void Attach(broker::Broker& broker, geo::GeoAssociator* geo);
  /// Install as BrokerOptions::on_delivery.
  void OnDelivery(broker::Delivery const& d);

  /// Binds host:port (port 0 picks one) and starts accepting. Throws
  /// kConnectionError.
  void Start(std::string const& host, std::uint16_t port);
  void Stop();
  std::uint16_t port() const { return port_; }

  nlohmann::json Handle(std::string& name, nlohmann::json const& frame);

 private:
  void AcceptLoop();
  void Serve(std::shared_ptr<FrameStream> stream);
  nlohmann::json Reassociate(std::string const& name, geo::LatLon p);

  broker::Broker* broker_ = nullptr;
  geo::GeoAssociator* geo_ = nullptr;
  std::mutex geo_mu_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<std::shared_ptr<FrameStream>> streams_;
  std::map<std::string, std::shared_ptr<FrameStream>> by_name_;
};

class BrokerClient {
 public:
  /// Connects and sends the hello frame. Throws kConnectionError, or the
  /// server's error code when it refuses the connection.
  BrokerClient(std::string const& host, std::uint16_t port, std::string const& name,
               std::string const& type = "", std::string const& token = "");

  /// Sends a request and waits for its reply, queueing deliveries that
  /// arrive meanwhile. Throws the server's error code on {"error": ...}.
  nlohmann::json Request(nlohmann::json const& frame, int timeout_ms = 5000);
  nlohmann::json Publish(std::string const& topic, nlohmann::json const& payload);
  void Subscribe(std::string const& topic);
  void Join(std::string const& cloudlet);

  std::optional<nlohmann::json> NextDelivery(int timeout_ms);
  nlohmann::json const& hello() const { return hello_; }

 private:
  std::unique_ptr<FrameStream> stream_;
  std::deque<nlohmann::json> deliveries_;
  nlohmann::json hello_;
};

/// "host:port" with the host defaulting to 127.0.0.1. Throws
/// kInvalidArgument.
std::pair<std::string, std::uint16_t> ParseAddress(std::string const& addr);

}  // namespace cits::net

#endif  // CITS_TCP_H
