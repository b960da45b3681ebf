#include "tgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tgan {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {
constexpr const char* kMagic = "tgan-tensors 1";
}

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << kMagic << '\n';
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \n\t") != std::string::npos) {
      throw FormatError("tensor name '" + name + "' must be a single token");
    }
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  }
  out << "end 0 0\n";
  for (const auto& [name, t] : tensors) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

TensorMap load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError(path.string() + ": not a tensor file");
  std::vector<std::pair<std::string, std::pair<long, long>>> header;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": header not terminated");
    std::istringstream ls(line);
    std::string name;
    long rows = -1, cols = -1;
    if (!(ls >> name >> rows >> cols) || rows < 0 || cols < 0) {
      throw FormatError(path.string() + ": bad header line '" + line + "'");
    }
    if (name == "end") break;
    header.push_back({name, {rows, cols}});
  }
  TensorMap out;
  for (const auto& [name, shape] : header) {
    Array2d t(shape.first, shape.second);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw FormatError(path.string() + ": truncated data for " + name);
    if (!out.emplace(name, std::move(t)).second) throw FormatError(path.string() + ": duplicate tensor " + name);
  }
  return out;
}

template <typename S>
void put_params(TensorMap& out, const std::string& prefix, const MlpParams<S>& params) {
  for (std::size_t l = 0; 2 * l < params.tensors.size(); ++l) {
    out[prefix + "." + std::to_string(l) + ".weight"] = params.tensors[2 * l].template cast<double>();
    out[prefix + "." + std::to_string(l) + ".bias"] = params.tensors[2 * l + 1].template cast<double>();
  }
}

MlpParams<double> take_params(const TensorMap& in, const std::string& prefix, const MlpSpec& spec) {
  MlpParams<double> p;
  for (int l = 0; l < spec.depth(); ++l) {
    for (const char* kind : {"weight", "bias"}) {
      const std::string name = prefix + "." + std::to_string(l) + "." + kind;
      const auto it = in.find(name);
      if (it == in.end()) throw DimensionError("checkpoint has no tensor " + name);
      p.tensors.push_back(it->second);
    }
  }
  const std::string extra = prefix + "." + std::to_string(spec.depth()) + ".weight";
  if (in.count(extra)) {
    throw DimensionError("checkpoint " + prefix + " has more than the " + std::to_string(spec.depth()) +
                         " layers the config expects");
  }
  check_params(spec, p, prefix);
  return p;
}

template void put_params(TensorMap&, const std::string&, const MlpParams<double>&);
template void put_params(TensorMap&, const std::string&, const MlpParams<float>&);

}  // namespace tgan
