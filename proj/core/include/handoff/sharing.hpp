#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "handoff/ap_registry.hpp"
#include "handoff/geo.hpp"

namespace handoff {

// Socket-level failure: refused connection, broken frame, truncated stream.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The peer answered, but not with what the protocol promises here.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UploadRejection {
  std::size_t index = 0;
  std::string reason;
};

struct UploadResult {
  std::size_t accepted = 0;
  std::vector<UploadRejection> rejected;
};

struct RemoteHit {
  ApRecord record;
  double distance_m = 0.0;
};

// Length-prefixed JSON over TCP: each frame is a 4-byte big-endian payload
// size followed by that many bytes of UTF-8 JSON. Requests carry an "op"
// field ("upload" or "nearest"); a malformed request gets an {"error": ...}
// reply and the connection stays usable.
class SharingServer {
 public:
  explicit SharingServer(Registry initial = Registry{});
  ~SharingServer();
  SharingServer(const SharingServer&) = delete;
  SharingServer& operator=(const SharingServer&) = delete;

  void start(std::uint16_t port = 0);  // 0 picks an ephemeral port
  void stop();
  std::uint16_t port() const;

  Registry snapshot() const;  // copy of the current store

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One connection per call. Throw TransportError when the socket fails and
// ProtocolError when the reply shape is wrong; per-entry validation failures
// come back in UploadResult::rejected.
UploadResult client_upload(const std::string& endpoint, const std::vector<ApRecord>& entries);
std::vector<RemoteHit> client_nearest(const std::string& endpoint, const GeoPoint& p,
                                      std::size_t max_results);

// Reply-shaped JSON text for a set of hits, exactly as the server frames it.
std::string render_nearest_reply(const std::vector<RemoteHit>& hits);

}  // namespace handoff
