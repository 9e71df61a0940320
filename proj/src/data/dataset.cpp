#include "eegdiff/data/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::data {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "dataset payloads are written in host order and must be little-endian");

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Real: return "real";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::NoiseControl: return "noise-control";
  }
  return "unknown";
}

bool is_valid_target(const std::string& name) {
  return std::any_of(std::begin(kTargetNames), std::end(kTargetNames),
                     [&](const char* t) { return name == t; });
}

std::vector<std::string> default_channel_names(std::int64_t count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    names.push_back((i < 10 ? "ch0" : "ch") + std::to_string(i));
  }
  return names;
}

void LabeledDataset::validate() const {
  if (!epochs.defined() || epochs.dim() != 3) throw DataError("epochs must be an (N, C, L) tensor");
  if (epochs.scalar_type() != torch::kFloat) throw DataError("epochs must be float32");
  const auto n = static_cast<std::size_t>(size());
  if (labels.size() != n || subjects.size() != n || provenance.size() != n) {
    throw DataError("epochs, labels, subjects and provenance differ in length");
  }
  if (!conditions.empty() && conditions.size() != n) throw DataError("conditions length mismatch");
  for (auto l : labels) {
    if (l > 1) throw DataError("labels must be 0 or 1");
  }
  if (!channel_names.empty() && static_cast<std::int64_t>(channel_names.size()) != channels()) {
    throw DataError("channel_names length differs from the channel count");
  }
  if (normalization.applied && (static_cast<std::int64_t>(normalization.mean.size()) != channels() ||
                                static_cast<std::int64_t>(normalization.stdev.size()) != channels())) {
    throw DataError("normalization stats do not cover every channel");
  }
  if (!is_valid_target(target_name)) throw DataError("unknown target name '" + target_name + "'");
  if (n > 0 && !torch::isfinite(epochs).all().item<bool>()) throw DataError("epochs contain non-finite values");
}

LabeledDataset LabeledDataset::subset(std::span<const std::int64_t> indices) const {
  LabeledDataset out;
  out.target_name = target_name;
  out.sample_rate = sample_rate;
  out.channel_names = channel_names;
  out.normalization = normalization;
  std::vector<std::int64_t> idx(indices.begin(), indices.end());
  out.epochs = epochs.index_select(0, torch::tensor(idx, torch::kLong)).contiguous();
  for (auto i : idx) {
    const auto u = static_cast<std::size_t>(i);
    out.labels.push_back(labels.at(u));
    out.subjects.push_back(subjects.at(u));
    out.provenance.push_back(provenance.at(u));
    if (!conditions.empty()) out.conditions.push_back(conditions.at(u));
  }
  return out;
}

std::vector<std::int64_t> LabeledDataset::indices_of_subjects(std::span<const std::uint16_t> ids) const {
  const std::set<std::uint16_t> wanted(ids.begin(), ids.end());
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (wanted.count(subjects[i])) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::vector<std::uint16_t> LabeledDataset::unique_subjects() const {
  std::set<std::uint16_t> s(subjects.begin(), subjects.end());
  return {s.begin(), s.end()};
}

double LabeledDataset::positive_rate() const {
  if (labels.empty()) return 0.0;
  return static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / static_cast<double>(labels.size());
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.channels() != b.channels() || a.timesteps() != b.timesteps()) {
    throw DataError("cannot concatenate datasets with different epoch shapes");
  }
  LabeledDataset out = a;
  out.epochs = torch::cat({a.epochs, b.epochs}, 0);
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.subjects.insert(out.subjects.end(), b.subjects.begin(), b.subjects.end());
  out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
  if (!a.conditions.empty() || !b.conditions.empty()) {
    // Real epochs carry no condition; mark them with the all-ones sentinel.
    auto fill = [](const LabeledDataset& d) {
      return d.conditions.empty() ? std::vector<std::uint32_t>(static_cast<std::size_t>(d.size()), UINT32_MAX)
                                  : d.conditions;
    };
    out.conditions = fill(a);
    auto tail = fill(b);
    out.conditions.insert(out.conditions.end(), tail.begin(), tail.end());
  }
  return out;
}

namespace {

constexpr int kFormatVersion = 1;

template <typename T>
void write_raw(const fs::path& path, const T* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!out) throw DataError("failed to write " + path.string());
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing payload file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<T> decode(const std::vector<char>& bytes, std::size_t count, const char* name) {
  if (bytes.size() != count * sizeof(T)) {
    throw DataError(std::string(name) + " holds " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                    std::to_string(count * sizeof(T)));
  }
  std::vector<T> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::uint32_t crc_update(std::uint32_t crc, const void* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace

void save_dataset(const LabeledDataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir);
  const auto epochs = dataset.epochs.contiguous();
  const auto n = static_cast<std::size_t>(dataset.size());
  std::vector<std::uint8_t> prov(n);
  std::transform(dataset.provenance.begin(), dataset.provenance.end(), prov.begin(),
                 [](Provenance p) { return static_cast<std::uint8_t>(p); });

  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  const auto epoch_bytes = static_cast<std::size_t>(epochs.numel()) * sizeof(float);
  crc = crc_update(crc, epochs.data_ptr<float>(), epoch_bytes);
  crc = crc_update(crc, dataset.labels.data(), n);
  crc = crc_update(crc, dataset.subjects.data(), n * sizeof(std::uint16_t));
  crc = crc_update(crc, prov.data(), n);
  if (!dataset.conditions.empty()) crc = crc_update(crc, dataset.conditions.data(), n * sizeof(std::uint32_t));

  write_raw(dir / "epochs.f32le", epochs.data_ptr<float>(), static_cast<std::size_t>(epochs.numel()));
  write_raw(dir / "labels.u8", dataset.labels.data(), n);
  write_raw(dir / "subjects.u16", dataset.subjects.data(), n);
  write_raw(dir / "provenance.u8", prov.data(), n);
  if (!dataset.conditions.empty()) {
    write_raw(dir / "conditions.u32", dataset.conditions.data(), n);
  } else {
    fs::remove(dir / "conditions.u32");
  }

  nlohmann::json manifest{
      {"format_version", kFormatVersion},
      {"count", n},
      {"shape", {dataset.channels(), dataset.timesteps()}},
      {"sample_rate", dataset.sample_rate},
      {"target_name", dataset.target_name},
      {"channel_names", dataset.channel_names.empty() ? default_channel_names(dataset.channels())
                                                      : dataset.channel_names},
      {"normalization",
       {{"applied", dataset.normalization.applied},
        {"mean", dataset.normalization.mean},
        {"std", dataset.normalization.stdev}}},
      {"has_conditions", !dataset.conditions.empty()},
      {"checksum", "crc32:" + hex32(crc)}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("failed to write manifest in " + dir.string());
}

LabeledDataset load_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest: " + std::string(e.what()));
  }
  try {
    if (m.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported dataset format version");
    const auto n = m.at("count").get<std::size_t>();
    const auto channels = m.at("shape").at(0).get<std::int64_t>();
    const auto timesteps = m.at("shape").at(1).get<std::int64_t>();
    if (channels < 1 || timesteps < 1) throw DataError("manifest shape must be positive");

    const auto epoch_bytes = read_bytes(dir / "epochs.f32le");
    const auto label_bytes = read_bytes(dir / "labels.u8");
    const auto subject_bytes = read_bytes(dir / "subjects.u16");
    const auto prov_bytes = read_bytes(dir / "provenance.u8");
    const bool has_conditions = m.value("has_conditions", false);
    std::vector<char> cond_bytes;
    if (has_conditions) cond_bytes = read_bytes(dir / "conditions.u32");

    const auto values = decode<float>(epoch_bytes, n * static_cast<std::size_t>(channels * timesteps), "epochs.f32le");
    LabeledDataset d;
    d.labels = decode<std::uint8_t>(label_bytes, n, "labels.u8");
    d.subjects = decode<std::uint16_t>(subject_bytes, n, "subjects.u16");
    const auto prov = decode<std::uint8_t>(prov_bytes, n, "provenance.u8");
    if (has_conditions) d.conditions = decode<std::uint32_t>(cond_bytes, n, "conditions.u32");

    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    for (const auto* bytes : {&epoch_bytes, &label_bytes, &subject_bytes, &prov_bytes}) {
      crc = crc_update(crc, bytes->data(), bytes->size());
    }
    if (has_conditions) crc = crc_update(crc, cond_bytes.data(), cond_bytes.size());
    if ("crc32:" + hex32(crc) != m.at("checksum").get<std::string>()) {
      throw DataError("checksum mismatch in " + dir.string());
    }

    for (auto p : prov) {
      if (p > 2) throw DataError("unknown provenance tag");
      d.provenance.push_back(static_cast<Provenance>(p));
    }
    d.epochs = torch::from_blob(const_cast<float*>(values.data()),
                                {static_cast<std::int64_t>(n), channels, timesteps}, torch::kFloat)
                   .clone();
    d.target_name = m.at("target_name").get<std::string>();
    d.sample_rate = m.at("sample_rate").get<double>();
    d.channel_names = m.at("channel_names").get<std::vector<std::string>>();
    const auto& norm = m.at("normalization");
    d.normalization.applied = norm.at("applied").get<bool>();
    d.normalization.mean = norm.at("mean").get<std::vector<double>>();
    d.normalization.stdev = norm.at("std").get<std::vector<double>>();
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest field error: " + std::string(e.what()));
  }
}

}  // namespace eegdiff::data
