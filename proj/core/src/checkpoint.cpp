// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "snnt/errors.hpp"

namespace snnt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts are unsupported");

namespace {
constexpr const char* kMagic = "SNNT-CKPT v1";

// Header strings are whitespace-delimited tokens; escape the two characters
// that would break that.
std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == ' ') out += "\\s";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out;
}

std::string unescape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      if (s[i] == 's') out += ' ';
      else if (s[i] == 'n') out += '\n';
      else out += s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}
}  // namespace

void write_checkpoint(const std::string& path, const NamedTensors& tensors,
                      const std::string& meta_json) {
  std::ostringstream header;
  header << kMagic << "\n";
  header << "meta " << escape(meta_json) << "\n";
  header << "tensors " << tensors.size() << "\n";
  int64_t offset = 0;
  for (const auto& [name, tensor] : tensors) {
    header << escape(name) << " f64 " << tensor.rank();
    for (int d : tensor.shape()) header << " " << d;
    header << " " << offset << " " << tensor.size() << "\n";
    offset += tensor.size() * static_cast<int64_t>(sizeof(double));
  }
  header << "payload " << offset << "\n";

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open checkpoint '" + path + "' for writing");
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, tensor] : tensors) {
    os.write(reinterpret_cast<const char*>(tensor.data()),
             static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!os) throw ConfigError("short write to checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint '" + path + "'");

  auto bad = [&](const std::string& why) {
    return ConfigError("malformed checkpoint '" + path + "': " + why);
  };

  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw bad("bad magic");

  Checkpoint out;
  if (!std::getline(is, line) || line.rfind("meta ", 0) != 0) throw bad("missing meta");
  out.meta_json = unescape(line.substr(5));

  if (!std::getline(is, line) || line.rfind("tensors ", 0) != 0) {
    throw bad("missing tensor count");
  }
  const size_t count = std::stoull(line.substr(8));

  struct Entry {
    std::string name;
    Shape shape;
    int64_t offset = 0;
    int64_t numel = 0;
  };
  std::vector<Entry> entries;
  entries.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw bad("truncated header");
    std::istringstream row(line);
    Entry e;
    std::string dtype;
    int rank = 0;
    row >> e.name >> dtype >> rank;
    if (!row || dtype != "f64" || rank < 0) throw bad("bad tensor row: " + line);
    e.name = unescape(e.name);
    e.shape.resize(static_cast<size_t>(rank));
    for (int r = 0; r < rank; ++r) row >> e.shape[static_cast<size_t>(r)];
    row >> e.offset >> e.numel;
    if (!row || e.numel != shape_numel(e.shape)) throw bad("bad tensor row: " + line);
    entries.push_back(std::move(e));
  }
  if (!std::getline(is, line) || line.rfind("payload ", 0) != 0) {
    throw bad("missing payload marker");
  }
  const int64_t payload_bytes = std::stoll(line.substr(8));
  const std::streampos payload_start = is.tellg();

  for (const Entry& e : entries) {
    std::vector<double> data(static_cast<size_t>(e.numel));
    is.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(e.numel * static_cast<int64_t>(sizeof(double))));
    if (!is) throw bad("truncated payload for tensor '" + e.name + "'");
    out.tensors.emplace(e.name, Tensor(e.shape, std::move(data)));
  }

  is.seekg(payload_start + static_cast<std::streamoff>(payload_bytes));
  if (!is) throw bad("payload shorter than declared");
  return out;
}

}  // namespace snnt
