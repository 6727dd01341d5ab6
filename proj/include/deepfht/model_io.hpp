#pragma once

// Model files: a JSON envelope {format_version, kind, recipe, ...} holding a
// DeepFHT network (kind "deepfht") or a Cox model (kind "cox"). Doubles are
// written with round-trip precision, so save/load is bit-exact.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "deepfht/cox.hpp"
#include "deepfht/data.hpp"
#include "deepfht/train.hpp"

namespace deepfht::io {

inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoxArtifact {
  cox::CoxModel model;
  std::optional<data::PreprocessRecipe> recipe;
};

using ModelArtifact = std::variant<train::FittedModel, CoxArtifact>;

std::string serialize(const train::FittedModel& model);
std::string serialize(const CoxArtifact& model);
ModelArtifact deserialize(std::string_view text);

std::string serialize_recipe(const data::PreprocessRecipe& recipe);
data::PreprocessRecipe deserialize_recipe(std::string_view text);

void save_model(const std::filesystem::path& path, const train::FittedModel& model);
void save_model(const std::filesystem::path& path, const CoxArtifact& model);
ModelArtifact load_model(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace deepfht::io
