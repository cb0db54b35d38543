#include "bafrcnn/synthgen/dataset.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bafrcnn/common/error.hpp"
#include "bafrcnn/common/json_fields.hpp"
#include "bafrcnn/synthgen/scene.hpp"

namespace bafrcnn::synthgen {
namespace fs = std::filesystem;
namespace {

static_assert(std::endian::native == std::endian::little, "image files assume a little-endian host");

constexpr char kMagic[4] = {'X', 'B', 'G', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[at + static_cast<std::size_t>(k)]) << (8 * k);
  return v;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string sample_name(std::size_t index) {
  std::ostringstream s;
  s << std::setw(6) << std::setfill('0') << index << ".xbg";
  return s.str();
}

}  // namespace

std::vector<std::uint8_t> encode_image(std::size_t height, std::size_t width, std::span<const float> pixels) {
  if (pixels.size() != height * width) throw std::invalid_argument("encode_image: pixel count does not match extents");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(16 + 4 * pixels.size());
  put_u32(out, static_cast<std::uint32_t>(height));
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, 1);
  for (float v : pixels) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<float> decode_image(std::span<const std::uint8_t> b, std::size_t* height, std::size_t* width) {
  if (b.size() < 16 || std::memcmp(b.data(), kMagic, 4) != 0) throw ValidationError("image: missing XBG1 header");
  const std::size_t h = get_u32(b, 4), w = get_u32(b, 8), c = get_u32(b, 12);
  if (c != 1) throw ValidationError("image: expected 1 channel, found " + std::to_string(c));
  if (b.size() != 16 + 4 * h * w) {
    throw ValidationError("image: size " + std::to_string(b.size()) + " bytes does not match " + std::to_string(h) +
                          "x" + std::to_string(w));
  }
  std::vector<float> px(h * w);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::bit_cast<float>(get_u32(b, 16 + 4 * i));
  if (height != nullptr) *height = h;
  if (width != nullptr) *width = w;
  return px;
}

void write_image(const fs::path& path, std::size_t height, std::size_t width, std::span<const float> pixels) {
  write_bytes(path, encode_image(height, width, pixels));
}

std::vector<float> read_image(const fs::path& path, std::size_t* height, std::size_t* width) {
  try {
    return decode_image(read_bytes(path), height, width);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void DatasetManifest::validate() const {
  if (split != "train" && split != "test") throw ValidationError("manifest: split must be train or test, got '" + split + "'");
  if (kind != "scene" && kind != "probe") throw ValidationError("manifest: unknown kind '" + kind + "'");
  for (const auto& s : samples) {
    const bool must_have = domain == Domain::kHC || kind == "probe";
    if (must_have && s.annotations.empty()) throw ValidationError("manifest: " + s.path + " has no annotations");
    if (!must_have && !s.annotations.empty()) throw ValidationError("manifest: SOC sample " + s.path + " has annotations");
    for (const auto& a : s.annotations) {
      if (a.class_id < 1 || a.class_id > detector::kNumThreatClasses || !a.box.valid()) {
        throw ValidationError("manifest: invalid annotation in " + s.path);
      }
    }
  }
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : m.samples) {
    nlohmann::json anns = nlohmann::json::array();
    for (const auto& a : s.annotations) {
      anns.push_back({{"class_id", a.class_id}, {"box", {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}}});
    }
    samples.push_back({{"path", s.path}, {"seed", s.seed}, {"annotations", std::move(anns)}});
  }
  j = {{"version", m.version},      {"config_hash", m.config_hash}, {"domain", to_string(m.domain)},
       {"split", m.split},          {"kind", m.kind},               {"samples", std::move(samples)}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m.version = j.at("version").get<int>();
  if (m.version != 1) throw ValidationError("manifest: unsupported version " + std::to_string(m.version));
  m.config_hash = j.at("config_hash").get<std::string>();
  m.domain = parse_domain(j.at("domain").get<std::string>());
  m.split = j.at("split").get<std::string>();
  m.kind = j.value("kind", std::string("scene"));
  m.samples.clear();
  for (const auto& s : j.at("samples")) {
    ManifestSample out;
    out.path = s.at("path").get<std::string>();
    out.seed = s.at("seed").get<std::uint64_t>();
    for (const auto& a : s.at("annotations")) {
      const auto b = a.at("box").get<std::vector<double>>();
      if (b.size() != 4) throw ValidationError("manifest: box must have 4 coordinates");
      out.annotations.push_back({a.at("class_id").get<int>(), detector::Box{b[0], b[1], b[2], b[3]}});
    }
    m.samples.push_back(std::move(out));
  }
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  const nlohmann::json j = m;
  const std::string text = j.dump(1) + "\n";
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    m = nlohmann::json::parse(in).get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void to_json(nlohmann::json& j, const DatasetCounts& c) {
  j = {{"hc_train", c.hc_train}, {"soc_train", c.soc_train}, {"hc_test", c.hc_test}, {"soc_test", c.soc_test},
       {"probe", c.probe}};
}

void from_json(const nlohmann::json& j, DatasetCounts& c) {
  read_field(j, "hc_train", c.hc_train);
  read_field(j, "soc_train", c.soc_train);
  read_field(j, "hc_test", c.hc_test);
  read_field(j, "soc_test", c.soc_test);
  read_field(j, "probe", c.probe);
}

std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t global_index) noexcept {
  return base_seed ^ global_index;
}

std::vector<DatasetManifest> generate_dataset(const SynthConfig& config, const DatasetCounts& counts,
                                              std::uint64_t base_seed, const fs::path& out_dir, std::size_t threads) {
  config.validate();
  const std::string hash = config_hash(config);
  struct Subset {
    const char* name;
    std::size_t count;
    Domain domain;
    const char* split;
    bool probe;
  };
  const Subset subsets[] = {{kSubsetNames[0], counts.hc_train, Domain::kHC, "train", false},
                            {kSubsetNames[1], counts.soc_train, Domain::kSOC, "train", false},
                            {kSubsetNames[2], counts.hc_test, Domain::kHC, "test", false},
                            {kSubsetNames[3], counts.soc_test, Domain::kSOC, "test", false},
                            {kSubsetNames[4], counts.probe, Domain::kSOC, "test", true}};

  std::vector<fs::path> created;  // files and directories, in creation order
  std::mutex created_mu;
  auto record = [&](const fs::path& p) {
    std::lock_guard lock(created_mu);
    created.push_back(p);
  };
  auto cleanup = [&] {
    std::error_code ec;
    for (auto it = created.rbegin(); it != created.rend(); ++it) fs::remove(*it, ec);
  };

  std::vector<DatasetManifest> manifests;
  try {
    if (!fs::exists(out_dir)) {
      fs::create_directories(out_dir);
      record(out_dir);
    }
    std::uint64_t offset = 0;
    for (const Subset& sub : subsets) {
      DatasetManifest m;
      m.config_hash = hash;
      m.domain = sub.domain;
      m.split = sub.split;
      m.kind = sub.probe ? "probe" : "scene";
      m.samples.resize(sub.count);
      const fs::path dir = out_dir / sub.name;
      if (!fs::exists(dir)) {
        fs::create_directory(dir);
        record(dir);
      }

      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      auto worker = [&] {
        for (std::size_t i = next++; i < sub.count; i = next++) {
          try {
            const std::uint64_t seed = sample_seed(base_seed, offset + i);
            const Scene scene = sub.probe ? generate_probe_scene(config, seed) : generate_scene(config, sub.domain, seed);
            const std::string name = sample_name(i);
            write_image(dir / name, scene.image.height, scene.image.width, scene.image.pixels);
            record(dir / name);
            m.samples[i] = ManifestSample{std::string(sub.name) + "/" + name, seed, scene.annotations};
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = sub.count;
          }
        }
      };
      const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, sub.count));
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);

      m.validate();
      const fs::path manifest_path = out_dir / (std::string(sub.name) + ".json");
      save_manifest(manifest_path, m);
      record(manifest_path);
      manifests.push_back(std::move(m));
      offset += sub.count;
    }
  } catch (...) {
    cleanup();
    throw;
  }
  return manifests;
}

LoadedDataset load_dataset(const fs::path& manifest_path) {
  LoadedDataset d;
  d.manifest = load_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  d.images.reserve(d.manifest.samples.size());
  for (const auto& s : d.manifest.samples) {
    std::size_t h = 0, w = 0;
    d.images.push_back(read_image(root / s.path, &h, &w));
    if (d.images.size() == 1) {
      d.height = h;
      d.width = w;
    } else if (h != d.height || w != d.width) {
      throw ValidationError("dataset: " + s.path + " has extents " + std::to_string(h) + "x" + std::to_string(w) +
                            ", expected " + std::to_string(d.height) + "x" + std::to_string(d.width));
    }
  }
  return d;
}

void to_json(nlohmann::json& j, const GenerationConfig& c) {
  j = {{"synth", c.synth}, {"counts", c.counts}, {"threads", c.threads}};
}

GenerationConfig load_generation_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open generation config " + path.string());
  GenerationConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw ValidationError(path.string() + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "synth" && key != "counts" && key != "threads") {
        throw ValidationError(path.string() + ": unknown field '" + key + "'");
      }
    }
    read_field(j, "synth", c.synth);
    read_field(j, "counts", c.counts);
    read_field(j, "threads", c.threads);
    c.synth.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (c.threads == 0) throw ValidationError(path.string() + ": threads must be at least 1");
  return c;
}

}  // namespace bafrcnn::synthgen
