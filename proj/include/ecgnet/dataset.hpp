#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/serialize.hpp"

namespace ecgnet::data {

inline constexpr int kBaseLen = 512;
inline constexpr int kCanonicalRate = 512;
inline constexpr int kMaxLevel = 6;

struct EcgRecord {
  std::vector<float> samples;  // millivolts
  int sample_rate_hz = kCanonicalRate;
  int label = -1;  // -1 = unlabeled
};

struct Dataset {
  std::vector<EcgRecord> records;
  int sample_rate_hz = kCanonicalRate;
  int num_classes = 20;
};

// Circular rotation at a seeded uniform split point; label preserved.
inline EcgRecord augment_shift(const EcgRecord& rec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t k = rng.uniform_int(rec.samples.size());
  EcgRecord out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.label = rec.label;
  out.samples.reserve(rec.samples.size());
  out.samples.insert(out.samples.end(), rec.samples.begin() + static_cast<std::ptrdiff_t>(k),
                     rec.samples.end());
  out.samples.insert(out.samples.end(), rec.samples.begin(),
                     rec.samples.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

struct Segmentation {
  int max_level = 0;  // s_l
  // per_level[s-1] holds the 2^{s_l - s} consecutive segments of level s
  std::vector<std::vector<EcgRecord>> per_level;
};

// A record of length base_len * 2^{s_l - 1} splits, at level s, into
// k_s = 2^{s_l - s} consecutive non-overlapping pieces of length
// base_len * 2^{s - 1}.
inline Segmentation segment(const EcgRecord& rec, int base_len = kBaseLen) {
  const std::size_t len = rec.samples.size();
  int s_l = 0;
  for (int s = 1; s <= kMaxLevel; ++s) {
    if (len == static_cast<std::size_t>(base_len) << (s - 1)) {
      s_l = s;
      break;
    }
  }
  if (s_l == 0)
    throw NotPowerOfTwoLength("record length " + std::to_string(len) +
                              " is not base_len * 2^{s-1} for s in 1..6");
  Segmentation out;
  out.max_level = s_l;
  out.per_level.resize(static_cast<std::size_t>(s_l));
  for (int s = 1; s <= s_l; ++s) {
    const std::size_t seg_len = static_cast<std::size_t>(base_len) << (s - 1);
    const int k_s = 1 << (s_l - s);
    auto& list = out.per_level[static_cast<std::size_t>(s - 1)];
    for (int k = 0; k < k_s; ++k) {
      EcgRecord seg;
      seg.sample_rate_hz = rec.sample_rate_hz;
      seg.label = rec.label;
      const auto begin = rec.samples.begin() + static_cast<std::ptrdiff_t>(seg_len * k);
      seg.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(seg_len));
      list.push_back(std::move(seg));
    }
  }
  return out;
}

// Longer records are head-cropped, shorter ones tiled then cropped.
inline EcgRecord fit_length(const EcgRecord& rec, std::size_t target_len = 16384) {
  if (rec.samples.empty()) throw EmptySignal("fit_length on empty record");
  EcgRecord out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.label = rec.label;
  out.samples.resize(target_len);
  for (std::size_t i = 0; i < target_len; ++i) out.samples[i] = rec.samples[i % rec.samples.size()];
  return out;
}

// Stratified k-fold split; per-class fold sizes differ by at most 1.
inline std::vector<std::vector<std::size_t>> split_folds(const Dataset& ds, int k,
                                                         std::uint64_t seed) {
  if (k < 1) throw Error("fold count must be >= 1");
  std::vector<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const int label = ds.records[i].label;
    if (label < 0 || label >= ds.num_classes) throw BadLabel("record " + std::to_string(i));
    if (by_class.size() <= static_cast<std::size_t>(label))
      by_class.resize(static_cast<std::size_t>(label) + 1);
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  SplitMix64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (auto& cls : by_class) {
    for (std::size_t i = cls.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_int(i);
      std::swap(cls[i - 1], cls[j]);
    }
    for (std::size_t i = 0; i < cls.size(); ++i)
      folds[i % static_cast<std::size_t>(k)].push_back(cls[i]);
  }
  return folds;
}

// ---- file formats -----------------------------------------------------------

inline constexpr std::uint32_t kDatasetVersion = 1;

// ECGD dataset file:
//   magic "ECGD", version u32 LE, sample_rate u32 LE, class_count u32 LE,
//   record_count u32 LE; per record: label u32 LE (0xFFFFFFFF = unlabeled),
//   length u32 LE, samples f32 LE.
inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write("ECGD", 4);
  io::detail::write_u32(os, kDatasetVersion);
  io::detail::write_u32(os, static_cast<std::uint32_t>(ds.sample_rate_hz));
  io::detail::write_u32(os, static_cast<std::uint32_t>(ds.num_classes));
  io::detail::write_u32(os, static_cast<std::uint32_t>(ds.records.size()));
  for (const auto& rec : ds.records) {
    io::detail::write_u32(os, rec.label < 0 ? 0xFFFFFFFFu
                                            : static_cast<std::uint32_t>(rec.label));
    io::detail::write_u32(os, static_cast<std::uint32_t>(rec.samples.size()));
    for (float v : rec.samples) io::detail::write_f32(os, v);
  }
  if (!os) throw Error("write failed for " + path);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string(magic, 4) != "ECGD")
    throw BadMagic("not an ECGD file: " + path);
  const std::uint32_t version = io::detail::read_u32(is);
  if (version != kDatasetVersion)
    throw VersionUnsupported("dataset format version " + std::to_string(version));
  Dataset ds;
  ds.sample_rate_hz = static_cast<int>(io::detail::read_u32(is));
  ds.num_classes = static_cast<int>(io::detail::read_u32(is));
  const std::uint32_t count = io::detail::read_u32(is);
  ds.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EcgRecord rec;
    rec.sample_rate_hz = ds.sample_rate_hz;
    const std::uint32_t raw_label = io::detail::read_u32(is);
    rec.label = raw_label == 0xFFFFFFFFu ? -1 : static_cast<int>(raw_label);
    if (rec.label >= ds.num_classes) throw BadLabel("record " + std::to_string(i));
    const std::uint32_t len = io::detail::read_u32(is);
    rec.samples.resize(len);
    for (auto& v : rec.samples) v = io::detail::read_f32(is);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

// CSV rows are `label,v0,v1,...`; all rows must have the same sample count.
inline Dataset import_csv(const std::string& path, int sample_rate_hz) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  Dataset ds;
  ds.sample_rate_hz = sample_rate_hz;
  int max_label = -1;
  std::size_t expected_len = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    EcgRecord rec;
    rec.sample_rate_hz = sample_rate_hz;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) throw RaggedCsvRow("line " + std::to_string(line_no));
    try {
      rec.label = std::stoi(cell);
    } catch (const std::exception&) {
      throw BadLabel("line " + std::to_string(line_no) + ": '" + cell + "'");
    }
    if (rec.label < 0) throw BadLabel("line " + std::to_string(line_no));
    while (std::getline(ss, cell, ',')) rec.samples.push_back(std::stof(cell));
    if (rec.samples.empty()) throw RaggedCsvRow("line " + std::to_string(line_no) + ": no samples");
    if (expected_len == 0) expected_len = rec.samples.size();
    if (rec.samples.size() != expected_len)
      throw RaggedCsvRow("line " + std::to_string(line_no) + ": " +
                         std::to_string(rec.samples.size()) + " values, expected " +
                         std::to_string(expected_len));
    max_label = std::max(max_label, rec.label);
    ds.records.push_back(std::move(rec));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

}  // namespace ecgnet::data
