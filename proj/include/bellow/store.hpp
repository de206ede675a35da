#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace bellow {

enum class ArtifactKind { dataset, model, shape, result, mesh };

const char* kind_dir(ArtifactKind k);  // "datasets", "models", ...
ArtifactKind kind_from_string(const std::string& s);

struct Artifact {
  ArtifactKind kind = ArtifactKind::dataset;
  std::string hash;  // 16 hex digits, FNV-1a 64 of the bytes
  std::string file;  // relative to the store root
  std::size_t bytes = 0;
  std::string label;

  friend bool operator==(const Artifact&, const Artifact&) = default;
};

std::string content_hash(const std::string& bytes);

// Content-addressed artifact directory:
//   root/{datasets,models,shapes,results,meshes}/<hash>.<ext>
//   root/manifest.json
// Artifacts are never rewritten. Putting identical bytes again returns the
// existing entry. Thread-safe.
class ProjectStore {
 public:
  explicit ProjectStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Throws ConflictError if the file under this hash holds other bytes.
  Artifact put(ArtifactKind kind, const std::string& bytes, const std::string& ext, const std::string& label = {});
  // Throws NotFoundError.
  std::string read(ArtifactKind kind, const std::string& hash) const;
  Artifact find(ArtifactKind kind, const std::string& hash) const;
  std::vector<Artifact> list(ArtifactKind kind) const;

  // Human-readable inconsistencies between manifest and directories: missing
  // files, hash mismatches, unindexed files. Empty when consistent.
  std::vector<std::string> verify() const;

 private:
  void load_manifest();
  void save_manifest() const;
  std::optional<Artifact> lookup(ArtifactKind kind, const std::string& hash) const;

  std::filesystem::path root_;
  std::vector<Artifact> entries_;
  mutable std::mutex mutex_;
};

}  // namespace bellow
