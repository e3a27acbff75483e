#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "handoff/geo.hpp"

namespace handoff {

// One discovered access point. bssid is the identity key, canonical lowercase
// aa:bb:cc:dd:ee:ff. range_m is the connectability radius.
struct ApRecord {
  std::int64_t timestamp_s = 0;
  std::string bssid;
  std::string ssid;
  GeoPoint location;
  double range_m = 0.0;
  std::optional<std::string> auth;
};

bool is_canonical_bssid(std::string_view s);

// Throws std::invalid_argument naming the offending field.
void validate_record(const ApRecord& r);

struct NearestHit {
  ApRecord record;
  double distance_m = 0.0;
};

// Raised by Registry::load with the 1-based line number of the bad entry.
struct AplogError : std::runtime_error {
  AplogError(std::size_t line_arg, const std::string& message)
      : std::runtime_error("line " + std::to_string(line_arg) + ": " + message),
        line(line_arg) {}
  std::size_t line;
};

// Log of known APs with a lat/lon grid index for nearest queries.
// Duplicate bssid keeps the newer timestamp (ties keep the incumbent).
class Registry {
 public:
  explicit Registry(double cell_size_deg = 0.01);
  Registry(const Registry& other);
  Registry& operator=(const Registry& other);
  Registry(Registry&&) = default;  // map nodes are stable across moves
  Registry& operator=(Registry&&) = default;

  // Returns true when the record was stored (new, or replaced an older entry).
  bool insert(const ApRecord& r);

  std::size_t size() const { return records_.size(); }
  const std::map<std::string, ApRecord>& records() const { return records_; }

  std::optional<NearestHit> nearest(const GeoPoint& p) const;
  std::vector<NearestHit> nearest_k(const GeoPoint& p, std::size_t k) const;

  // Nearest record whose distance <= its own range_m.
  std::optional<NearestHit> in_range(const GeoPoint& p) const;

  double cell_size_deg() const { return cell_deg_; }

  static Registry load(const std::filesystem::path& file, double cell_size_deg = 0.01);
  void save(const std::filesystem::path& file) const;

 private:
  struct Cell {
    std::int32_t row;
    std::int32_t col;
    bool operator==(const Cell&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const Cell& c) const {
      return std::hash<std::int64_t>()((std::int64_t(c.row) << 32) ^ std::uint32_t(c.col));
    }
  };

  Cell cell_of(const GeoPoint& p) const;
  void rebuild_grid();
  template <typename Visit>
  void search(const GeoPoint& p, Visit&& visit) const;

  double cell_deg_;
  std::int32_t cols_;  // longitude cells wrap modulo cols_
  std::int32_t rows_;
  double max_range_m_ = 0.0;  // upper bound over everything ever inserted
  std::map<std::string, ApRecord> records_;
  std::unordered_map<Cell, std::vector<const ApRecord*>, CellHash> grid_;
};

// aplog text format helpers (spaces in free-text fields URL-escaped).
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

}  // namespace handoff
