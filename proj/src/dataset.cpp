#include "ensmetric/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ensmetric/errors.hpp"

namespace ensmetric {
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "ensmetric-descriptors";
constexpr const char* kVersion = "1";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return out;
  }
}

void write_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(m(r, c)));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
  }
  if (!out) throw DataError("short write to " + path.string());
}

Matrix read_matrix(const fs::path& path, std::size_t rows, std::size_t dim) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw DataError("cannot stat " + path.string() + ": " + ec.message());
  if (size != rows * dim * 8) {
    std::ostringstream msg;
    msg << path.string() << ": expected " << rows << " x " << dim << " float64 values ("
        << rows * dim * 8 << " bytes), file has " << size << " bytes";
    throw DataError(msg.str());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      char buf[8];
      in.read(buf, 8);
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::bit_cast<double>(to_little(bits));
    }
    if (!in) throw DataError("short read from " + path.string());
    if (!m.row(static_cast<Eigen::Index>(r)).allFinite()) {
      std::ostringstream msg;
      msg << path.string() << ": non-finite value in row " << r;
      throw DataError(msg.str());
    }
  }
  return m;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

struct ViewEntry {
  fs::path file;
  IdList ids;
  bool has_file = false;
  bool has_ids = false;
};

struct ChannelEntry {
  std::size_t dim = 0;
  ViewEntry views[2];
};

int view_index(const std::string& v, std::size_t line) {
  if (v == "a") return 0;
  if (v == "b") return 1;
  std::ostringstream msg;
  msg << "manifest line " << line << ": view must be 'a' or 'b', got '" << v << "'";
  throw DataError(msg.str());
}

}  // namespace

const IdList& Dataset::identities() const {
  if (channels.empty()) throw DataError("dataset has no channels");
  return channels.front().view_a.identities();
}

std::vector<std::string> Dataset::channel_names() const {
  std::vector<std::string> out;
  for (const auto& c : channels) out.push_back(c.view_a.feature_name());
  return out;
}

Dataset Dataset::subset(const IdList& ids) const {
  Dataset out;
  for (const auto& c : channels) out.channels.push_back({c.view_a.subset(ids), c.view_b.subset(ids)});
  return out;
}

std::vector<DescriptorSet> Dataset::view_a() const {
  std::vector<DescriptorSet> out;
  for (const auto& c : channels) out.push_back(c.view_a);
  return out;
}

std::vector<DescriptorSet> Dataset::view_b() const {
  std::vector<DescriptorSet> out;
  for (const auto& c : channels) out.push_back(c.view_b);
  return out;
}

void Dataset::validate() const {
  const IdList& ref = identities();
  for (const auto& c : channels) {
    for (const DescriptorSet* s : {&c.view_a, &c.view_b}) {
      if (s->identities() != ref) {
        throw DataError("channel '" + s->feature_name() + "' view " + s->view() +
                        " does not list identities in canonical order");
      }
    }
  }
}

Dataset load_descriptors(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();

  std::map<std::string, std::string> header;
  std::vector<std::string> order;
  std::map<std::string, ChannelEntry> channels;

  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      std::ostringstream msg;
      msg << "manifest line " << lineno << ": expected 'key: value'";
      throw DataError(msg.str());
    }
    const std::string key = line.substr(0, colon);
    const auto fields = split_ws(line.substr(colon + 1));
    const auto bad = [&](const char* why) {
      std::ostringstream msg;
      msg << "manifest line " << lineno << " (" << key << "): " << why;
      return DataError(msg.str());
    };
    if (key == "format" || key == "version" || key == "byte_order" || key == "value_type" ||
        key == "layout") {
      if (fields.size() != 1) throw bad("expected one value");
      header[key] = fields[0];
    } else if (key == "channel") {
      if (fields.size() != 2) throw bad("expected '<name> <dim>'");
      if (channels.count(fields[0])) throw bad("duplicate channel");
      ChannelEntry entry;
      try {
        entry.dim = std::stoul(fields[1]);
      } catch (const std::exception&) {
        throw bad("dimension is not an integer");
      }
      if (entry.dim < 1) throw bad("dimension must be >= 1");
      channels.emplace(fields[0], entry);
      order.push_back(fields[0]);
    } else if (key == "matrix" || key == "ids") {
      if (fields.size() < 2) throw bad("expected '<channel> <view> ...'");
      auto it = channels.find(fields[0]);
      if (it == channels.end()) throw bad("channel not declared before use");
      ViewEntry& view = it->second.views[view_index(fields[1], lineno)];
      if (key == "matrix") {
        if (fields.size() != 3) throw bad("expected '<channel> <view> <file>'");
        view.file = base / fields[2];
        view.has_file = true;
      } else {
        view.ids.assign(fields.begin() + 2, fields.end());
        view.has_ids = true;
      }
    } else {
      throw bad("unknown key");
    }
  }

  const auto expect = [&](const char* key, const char* value) {
    auto it = header.find(key);
    if (it == header.end() || it->second != value) {
      throw DataError(std::string("manifest: '") + key + "' must be '" + value + "'");
    }
  };
  expect("format", kFormat);
  expect("version", kVersion);
  expect("byte_order", "little-endian");
  expect("value_type", "float64");
  expect("layout", "row-major");
  if (order.empty()) throw DataError("manifest declares no channels");

  Dataset data;
  IdList canonical;
  std::unordered_set<std::string> canonical_set;
  for (const auto& name : order) {
    const ChannelEntry& entry = channels.at(name);
    DescriptorSet sets[2];
    for (int v = 0; v < 2; ++v) {
      const ViewEntry& view = entry.views[v];
      const std::string label = "channel '" + name + "' view " + (v == 0 ? "a" : "b");
      if (!view.has_file || !view.has_ids) throw DataError(label + ": missing matrix or ids line");
      std::unordered_set<std::string> seen;
      for (const auto& id : view.ids) {
        if (!seen.insert(id).second) throw DataError(label + ": duplicate identity '" + id + "'");
      }
      if (canonical.empty()) {
        canonical = view.ids;
        canonical_set = seen;
        if (canonical.empty()) throw DataError(label + ": no identities");
      } else {
        for (const auto& id : canonical) {
          if (!seen.count(id)) throw DataError(label + ": missing identity '" + id + "'");
        }
        for (const auto& id : view.ids) {
          if (!canonical_set.count(id)) {
            throw DataError(label + ": unexpected identity '" + id + "'");
          }
        }
      }
      const Matrix raw = read_matrix(view.file, view.ids.size(), entry.dim);
      DescriptorSet as_stored(name, v == 0 ? "a" : "b", view.ids, raw);
      sets[v] = as_stored.subset(canonical);
    }
    data.channels.push_back({std::move(sets[0]), std::move(sets[1])});
  }
  return data;
}

void save_descriptors(const fs::path& dir, const Dataset& data) {
  data.validate();
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# descriptor manifest\n"
           << "format: " << kFormat << "\n"
           << "version: " << kVersion << "\n"
           << "byte_order: little-endian\n"
           << "value_type: float64\n"
           << "layout: row-major\n";
  for (const auto& c : data.channels) {
    const std::string& name = c.view_a.feature_name();
    manifest << "channel: " << name << ' ' << c.view_a.dimension() << '\n';
    for (const DescriptorSet* s : {&c.view_a, &c.view_b}) {
      const std::string view = s == &c.view_a ? "a" : "b";
      const std::string file = name + "_" + view + ".f64";
      write_matrix(dir / file, s->descriptors());
      manifest << "matrix: " << name << ' ' << view << ' ' << file << '\n';
      manifest << "ids: " << name << ' ' << view;
      for (const auto& id : s->identities()) manifest << ' ' << id;
      manifest << '\n';
    }
  }
  std::ofstream out(dir / "manifest.txt", std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "manifest.txt").string());
  out << manifest.str();
}

}  // namespace ensmetric
