#include "radon/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "radon/errors.hpp"

namespace radon::ad {

namespace {
constexpr char kMagic[4] = {'C', 'A', 'O', 'R'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is, const char* what) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw BadInput(std::string("checkpoint: truncated ") + what);
  return v;
}
}  // namespace

ParamSlot& ParamStore::create(const std::string& path, Tensor init, bool trainable) {
  if (index_.count(path)) throw BadInput("ParamStore: duplicate path " + path);
  auto slot = std::make_unique<ParamSlot>();
  slot->path = path;
  slot->grad = Tensor::zeros(init.dims());
  slot->m = Tensor::zeros(init.dims());
  slot->v = Tensor::zeros(init.dims());
  slot->value = std::move(init);
  slot->trainable = trainable;
  ParamSlot* raw = slot.get();
  slots_.push_back(std::move(slot));
  index_[path] = raw;
  return *raw;
}

ParamSlot* ParamStore::find(const std::string& path) {
  auto it = index_.find(path);
  return it == index_.end() ? nullptr : it->second;
}

const ParamSlot* ParamStore::find(const std::string& path) const {
  auto it = index_.find(path);
  return it == index_.end() ? nullptr : it->second;
}

ParamSlot& ParamStore::at(const std::string& path) {
  ParamSlot* s = find(path);
  if (!s) throw BadInput("ParamStore: unknown path " + path);
  return *s;
}

std::vector<ParamSlot*> ParamStore::slots() {
  std::vector<ParamSlot*> out;
  out.reserve(slots_.size());
  for (auto& s : slots_) out.push_back(s.get());
  return out;
}

std::vector<const ParamSlot*> ParamStore::slots() const {
  std::vector<const ParamSlot*> out;
  out.reserve(slots_.size());
  for (auto& s : slots_) out.push_back(s.get());
  return out;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (auto& s : slots_) n += s->value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& s : slots_) s->grad.fill(0.0);
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& s : slots_) {
    if (!s->trainable) continue;
    for (int64_t i = 0; i < s->value.size(); ++i) {
      const double g = s->grad[i];
      s->m[i] = beta1 * s->m[i] + (1.0 - beta1) * g;
      s->v[i] = beta2 * s->v[i] + (1.0 - beta2) * g * g;
      const double mh = s->m[i] / bc1;
      const double vh = s->v[i] / bc2;
      s->value[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

double ParamStore::grad_norm() const {
  double s2 = 0.0;
  for (auto& s : slots_)
    for (int64_t i = 0; i < s->grad.size(); ++i) s2 += s->grad[i] * s->grad[i];
  return std::sqrt(s2);
}

double ParamStore::value_norm() const {
  double s2 = 0.0;
  for (auto& s : slots_)
    for (int64_t i = 0; i < s->value.size(); ++i) s2 += s->value[i] * s->value[i];
  return std::sqrt(s2);
}

void ParamStore::save(const std::string& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw BadInput("checkpoint: cannot open for write: " + file);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(slots_.size()));
  for (auto& s : slots_) {
    write_u32(os, static_cast<uint32_t>(s->path.size()));
    os.write(s->path.data(), static_cast<std::streamsize>(s->path.size()));
    write_u32(os, static_cast<uint32_t>(s->value.rank()));
    for (int d = 0; d < s->value.rank(); ++d) write_u32(os, static_cast<uint32_t>(s->value.dim(d)));
    os.write(reinterpret_cast<const char*>(s->value.data()),
             static_cast<std::streamsize>(s->value.size() * 8));
  }
  if (!os) throw BadInput("checkpoint: write failed: " + file);
}

void ParamStore::load(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw BadInput("checkpoint: cannot open: " + file);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw BadInput("checkpoint: bad magic: " + file);
  const uint32_t version = read_u32(is, "version");
  if (version != kVersion) throw BadInput("checkpoint: unsupported version");
  const uint32_t count = read_u32(is, "count");
  const bool fresh = slots_.empty();

  for (uint32_t p = 0; p < count; ++p) {
    const uint32_t plen = read_u32(is, "path length");
    std::string path(plen, '\0');
    if (!is.read(path.data(), plen)) throw BadInput("checkpoint: truncated path");
    const uint32_t rank = read_u32(is, "rank");
    if (rank > 3) throw BadInput("checkpoint: bad rank for " + path);
    std::vector<int64_t> dims;
    for (uint32_t d = 0; d < rank; ++d) dims.push_back(read_u32(is, "dim"));
    Tensor t(dims);
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8)))
      throw BadInput("checkpoint: truncated payload for " + path);

    if (fresh) {
      create(path, std::move(t));
    } else {
      ParamSlot* s = find(path);
      if (!s) throw BadInput("checkpoint: unknown parameter " + path);
      if (!(s->value.dims() == t.dims()))
        throw BadInput("checkpoint: shape mismatch for " + path + " (" + s->value.shape_str() +
                       " vs " + t.shape_str() + ")");
      s->value = std::move(t);
    }
  }
}

}  // namespace radon::ad
