#include "bellow/store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"

namespace bellow {

namespace fs = std::filesystem;

namespace {

constexpr ArtifactKind kKinds[] = {ArtifactKind::dataset, ArtifactKind::model, ArtifactKind::shape,
                                   ArtifactKind::result, ArtifactKind::mesh};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Write to a sibling temp file, then rename over the target.
void write_atomic(const fs::path& p, const std::string& bytes) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write '" + tmp.string() + "'");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename into '" + p.string() + "': " + ec.message());
}

bool valid_hash(const std::string& h) {
  return h.size() == 16 && h.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

const char* kind_dir(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::dataset: return "datasets";
    case ArtifactKind::model: return "models";
    case ArtifactKind::shape: return "shapes";
    case ArtifactKind::result: return "results";
    case ArtifactKind::mesh: return "meshes";
  }
  return "";
}

ArtifactKind kind_from_string(const std::string& s) {
  for (auto k : kKinds) {
    if (s == kind_dir(k)) return k;
  }
  throw FormatError("unknown artifact kind '" + s + "'");
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (auto k : kKinds) {
    fs::create_directories(root_ / kind_dir(k), ec);
    if (ec) throw IoError("cannot create store directory '" + (root_ / kind_dir(k)).string() + "': " + ec.message());
  }
  load_manifest();
}

void ProjectStore::load_manifest() {
  const fs::path p = root_ / "manifest.json";
  if (!fs::exists(p)) return;
  const Json j = parse_json(slurp(p));
  if (!j.is_object() || !j.contains("artifacts") || !j.at("artifacts").is_array()) {
    throw FormatError("store manifest is malformed");
  }
  for (const auto& e : j.at("artifacts")) {
    Artifact a;
    try {
      a.kind = kind_from_string(e.at("kind").get<std::string>());
      a.hash = e.at("hash").get<std::string>();
      a.file = e.at("file").get<std::string>();
      a.bytes = e.at("bytes").get<std::size_t>();
      a.label = e.value("label", "");
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("store manifest entry is malformed: ") + ex.what());
    }
    entries_.push_back(std::move(a));
  }
}

void ProjectStore::save_manifest() const {
  Json j;
  j["version"] = 1;
  j["artifacts"] = Json::array();
  for (const auto& a : entries_) {
    j["artifacts"].push_back(
        {{"kind", kind_dir(a.kind)}, {"hash", a.hash}, {"file", a.file}, {"bytes", a.bytes}, {"label", a.label}});
  }
  write_atomic(root_ / "manifest.json", j.dump(1) + '\n');
}

std::optional<Artifact> ProjectStore::lookup(ArtifactKind kind, const std::string& hash) const {
  for (const auto& a : entries_) {
    if (a.kind == kind && a.hash == hash) return a;
  }
  return std::nullopt;
}

Artifact ProjectStore::put(ArtifactKind kind, const std::string& bytes, const std::string& ext,
                           const std::string& label) {
  std::lock_guard lock(mutex_);
  const std::string hash = content_hash(bytes);
  if (auto existing = lookup(kind, hash)) {
    if (slurp(root_ / existing->file) != bytes) {
      throw ConflictError(std::string(kind_dir(kind)) + "/" + hash + " already holds different bytes");
    }
    return *existing;
  }
  Artifact a{kind, hash, std::string(kind_dir(kind)) + "/" + hash + "." + ext, bytes.size(), label};
  const fs::path p = root_ / a.file;
  if (fs::exists(p)) {
    if (slurp(p) != bytes) throw ConflictError("unindexed file '" + a.file + "' holds different bytes");
  } else {
    write_atomic(p, bytes);
  }
  entries_.push_back(a);
  save_manifest();
  return a;
}

Artifact ProjectStore::find(ArtifactKind kind, const std::string& hash) const {
  std::lock_guard lock(mutex_);
  if (!valid_hash(hash)) throw NotFoundError("no " + std::string(kind_dir(kind)) + " artifact '" + hash + "'");
  auto a = lookup(kind, hash);
  if (!a) throw NotFoundError("no " + std::string(kind_dir(kind)) + " artifact '" + hash + "'");
  return *a;
}

std::string ProjectStore::read(ArtifactKind kind, const std::string& hash) const {
  const Artifact a = find(kind, hash);
  return slurp(root_ / a.file);
}

std::vector<Artifact> ProjectStore::list(ArtifactKind kind) const {
  std::lock_guard lock(mutex_);
  std::vector<Artifact> out;
  for (const auto& a : entries_) {
    if (a.kind == kind) out.push_back(a);
  }
  return out;
}

std::vector<std::string> ProjectStore::verify() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> problems;
  for (const auto& a : entries_) {
    const fs::path p = root_ / a.file;
    if (!fs::exists(p)) {
      problems.push_back("missing " + a.file);
    } else if (content_hash(slurp(p)) != a.hash) {
      problems.push_back("hash mismatch " + a.file);
    }
  }
  for (auto k : kKinds) {
    for (const auto& f : fs::directory_iterator(root_ / kind_dir(k))) {
      const std::string rel = std::string(kind_dir(k)) + "/" + f.path().filename().string();
      bool indexed = false;
      for (const auto& a : entries_) indexed |= a.file == rel;
      if (!indexed) problems.push_back("unindexed " + rel);
    }
  }
  return problems;
}

}  // namespace bellow
