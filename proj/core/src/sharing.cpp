#include "handoff/sharing.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

namespace handoff {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<char*>(buf);
  while (n > 0) {
    ssize_t k = ::recv(fd, p, n, 0);
    if (k == 0) return false;
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += k;
    n -= std::size_t(k);
  }
  return true;
}

bool write_all(int fd, const void* buf, std::size_t n) {
  auto* p = static_cast<const char*>(buf);
  while (n > 0) {
    ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += k;
    n -= std::size_t(k);
  }
  return true;
}

bool send_frame(int fd, const std::string& payload) {
  std::uint32_t be = htonl(std::uint32_t(payload.size()));
  char hdr[4];
  std::memcpy(hdr, &be, 4);
  if (!write_all(fd, hdr, 4)) return false;
  return write_all(fd, payload.data(), payload.size());
}

std::optional<std::string> recv_frame(int fd) {
  char hdr[4];
  if (!read_exact(fd, hdr, 4)) return std::nullopt;
  std::uint32_t be;
  std::memcpy(&be, hdr, 4);
  std::uint32_t len = ntohl(be);
  if (len > kMaxFrameBytes) return std::nullopt;
  std::string payload(len, '\0');
  if (len > 0 && !read_exact(fd, payload.data(), len)) return std::nullopt;
  return payload;
}

json record_to_json(const ApRecord& r) {
  json j;
  j["t"] = r.timestamp_s;
  j["bssid"] = r.bssid;
  j["ssid"] = r.ssid;
  j["lat_deg"] = r.location.lat_deg();
  j["lon_deg"] = r.location.lon_deg();
  j["range_m"] = r.range_m;
  j["auth"] = r.auth ? json(*r.auth) : json(nullptr);
  return j;
}

ApRecord record_from_json(const json& j) {
  ApRecord r;
  r.timestamp_s = j.at("t").get<std::int64_t>();
  r.bssid = j.at("bssid").get<std::string>();
  r.ssid = j.at("ssid").get<std::string>();
  r.location =
      GeoPoint::from_degrees(j.at("lat_deg").get<double>(), j.at("lon_deg").get<double>());
  r.range_m = j.at("range_m").get<double>();
  if (j.contains("auth") && !j.at("auth").is_null()) r.auth = j.at("auth").get<std::string>();
  validate_record(r);
  return r;
}

}  // namespace

struct SharingServer::Impl {
  Registry store;
  mutable std::mutex store_mu;

  int listen_fd = -1;
  std::uint16_t port = 0;
  std::thread acceptor;
  std::atomic<bool> stopping{false};

  std::mutex conn_mu;
  std::vector<int> conn_fds;
  std::vector<std::thread> workers;

  explicit Impl(Registry initial) : store(std::move(initial)) {}

  std::string handle(const std::string& payload) {
    json reply;
    try {
      json req = json::parse(payload);
      std::string op = req.at("op").get<std::string>();
      if (op == "upload") {
        reply = do_upload(req);
      } else if (op == "nearest") {
        reply = do_nearest(req);
      } else {
        reply = json{{"error", "unknown op: " + op}};
      }
    } catch (const std::exception& e) {
      reply = json{{"error", e.what()}};
    }
    return reply.dump();
  }

  json do_upload(const json& req) {
    const json& entries = req.at("entries");
    if (!entries.is_array()) throw std::invalid_argument("entries: must be an array");
    std::size_t ok = 0;
    json rejected = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      try {
        ApRecord rec = record_from_json(entries[i]);
        std::lock_guard<std::mutex> lk(store_mu);
        store.insert(rec);
        ++ok;
      } catch (const std::exception& e) {
        rejected.push_back(json{{"index", i}, {"reason", e.what()}});
      }
    }
    json out;
    out["ok"] = ok;
    out["rejected"] = rejected;
    return out;
  }

  json do_nearest(const json& req) {
    GeoPoint p = GeoPoint::from_degrees(req.at("lat_deg").get<double>(),
                                        req.at("lon_deg").get<double>());
    std::int64_t want = 1;
    if (req.contains("max_results")) want = req.at("max_results").get<std::int64_t>();
    if (want < 0) throw std::invalid_argument("max_results: must be >= 0");
    std::vector<NearestHit> hits;
    {
      std::lock_guard<std::mutex> lk(store_mu);
      hits = store.nearest_k(p, std::size_t(want));
    }
    json results = json::array();
    for (const auto& h : hits) {
      json e = record_to_json(h.record);
      e["distance_m"] = h.distance_m;
      results.push_back(std::move(e));
    }
    json out;
    out["results"] = results;
    return out;
  }

  void serve_connection(int fd) {
    while (!stopping.load()) {
      auto frame = recv_frame(fd);
      if (!frame) break;
      if (!send_frame(fd, handle(*frame))) break;
    }
    ::close(fd);
    std::lock_guard<std::mutex> lk(conn_mu);
    conn_fds.erase(std::remove(conn_fds.begin(), conn_fds.end(), fd), conn_fds.end());
  }

  void accept_loop() {
    while (!stopping.load()) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        break;
      }
      std::lock_guard<std::mutex> lk(conn_mu);
      if (stopping.load()) {
        ::close(fd);
        break;
      }
      conn_fds.push_back(fd);
      workers.emplace_back([this, fd] { serve_connection(fd); });
    }
  }
};

SharingServer::SharingServer(Registry initial)
    : impl_(std::make_unique<Impl>(std::move(initial))) {}

SharingServer::~SharingServer() { stop(); }

void SharingServer::start(std::uint16_t port) {
  if (impl_->listen_fd >= 0) throw std::logic_error("server already started");
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int err = errno;
    ::close(fd);
    throw TransportError("bind: " + std::string(std::strerror(err)));
  }
  if (::listen(fd, 64) != 0) {
    int err = errno;
    ::close(fd);
    throw TransportError("listen: " + std::string(std::strerror(err)));
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    int err = errno;
    ::close(fd);
    throw TransportError("getsockname: " + std::string(std::strerror(err)));
  }
  impl_->listen_fd = fd;
  impl_->port = ntohs(addr.sin_port);
  impl_->stopping.store(false);
  impl_->acceptor = std::thread([impl = impl_.get()] { impl->accept_loop(); });
}

void SharingServer::stop() {
  if (impl_->listen_fd < 0) return;
  impl_->stopping.store(true);
  ::shutdown(impl_->listen_fd, SHUT_RDWR);
  ::close(impl_->listen_fd);
  impl_->listen_fd = -1;
  if (impl_->acceptor.joinable()) impl_->acceptor.join();

  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lk(impl_->conn_mu);
    for (int fd : impl_->conn_fds) ::shutdown(fd, SHUT_RDWR);
    workers.swap(impl_->workers);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

std::uint16_t SharingServer::port() const { return impl_->port; }

Registry SharingServer::snapshot() const {
  std::lock_guard<std::mutex> lk(impl_->store_mu);
  return impl_->store;
}

namespace {

struct FdCloser {
  int fd;
  ~FdCloser() { ::close(fd); }
};

int connect_endpoint(const std::string& endpoint) {
  auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
    throw TransportError("endpoint must be host:port, got: " + endpoint);
  std::string host = endpoint.substr(0, colon);
  std::string port = endpoint.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw TransportError("resolve " + endpoint + ": " + ::gai_strerror(rc));

  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("connect " + endpoint + ": " + std::strerror(errno));
  return fd;
}

json roundtrip(const std::string& endpoint, const json& req) {
  int fd = connect_endpoint(endpoint);
  FdCloser closer{fd};
  if (!send_frame(fd, req.dump())) throw TransportError("send to " + endpoint + " failed");
  auto reply = recv_frame(fd);
  if (!reply) throw TransportError("connection to " + endpoint + " closed mid-reply");
  json j = json::parse(*reply, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("reply is not valid JSON");
  if (j.contains("error")) throw ProtocolError(j.at("error").get<std::string>());
  return j;
}

}  // namespace

UploadResult client_upload(const std::string& endpoint, const std::vector<ApRecord>& entries) {
  json req;
  req["op"] = "upload";
  json arr = json::array();
  for (const auto& r : entries) arr.push_back(record_to_json(r));
  req["entries"] = arr;

  json reply = roundtrip(endpoint, req);
  UploadResult out;
  try {
    out.accepted = reply.at("ok").get<std::size_t>();
    for (const auto& rj : reply.at("rejected")) {
      out.rejected.push_back(
          UploadRejection{rj.at("index").get<std::size_t>(), rj.at("reason").get<std::string>()});
    }
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed upload reply: ") + e.what());
  }
  return out;
}

std::string render_nearest_reply(const std::vector<RemoteHit>& hits) {
  json results = json::array();
  for (const auto& h : hits) {
    json e = record_to_json(h.record);
    e["distance_m"] = h.distance_m;
    results.push_back(std::move(e));
  }
  json out;
  out["results"] = results;
  return out.dump(2);
}

std::vector<RemoteHit> client_nearest(const std::string& endpoint, const GeoPoint& p,
                                      std::size_t max_results) {
  json req;
  req["op"] = "nearest";
  req["lat_deg"] = p.lat_deg();
  req["lon_deg"] = p.lon_deg();
  req["max_results"] = max_results;

  json reply = roundtrip(endpoint, req);
  std::vector<RemoteHit> out;
  try {
    for (const auto& rj : reply.at("results")) {
      RemoteHit h;
      h.record = record_from_json(rj);
      h.distance_m = rj.at("distance_m").get<double>();
      out.push_back(std::move(h));
    }
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed nearest reply: ") + e.what());
  }
  return out;
}

}  // namespace handoff
