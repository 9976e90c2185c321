#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "ednig/archive.hpp"
#include "ednig/params.hpp"

namespace ednig {

// Parameter list -> archive directory (manifest order = list order).
void save_params(const std::filesystem::path& dir, const ConstParamList& params,
                 const nlohmann::json& meta);

// Loads an archive into an existing parameter list; names and shapes must
// match exactly. Returns the archive metadata.
nlohmann::json load_params(const std::filesystem::path& dir, const ParamList& params);

nlohmann::json read_archive_meta(const std::filesystem::path& dir);

// Commits `tmp` as `final`: removes any previous `final` and renames.
void replace_dir(const std::filesystem::path& tmp, const std::filesystem::path& final_dir);

class Generator;

// Accepts either a checkpoint directory (with generator/ inside) or a bare
// generator archive; rebuilds the network from its stored config and weights.
Generator load_generator_archive(const std::filesystem::path& path);

}  // namespace ednig
