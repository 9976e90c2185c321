#include "ednig/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "ednig/generator.hpp"

namespace ednig {

void save_params(const std::filesystem::path& dir, const ConstParamList& params,
                 const nlohmann::json& meta) {
    TensorArchive a;
    for (const auto& p : params) a.add(p.name, p.shape, *p.data);
    a.meta() = meta;
    a.save(dir);
}

nlohmann::json load_params(const std::filesystem::path& dir, const ParamList& params) {
    TensorArchive a = TensorArchive::load(dir);
    if (a.tensor_count() != params.size())
        throw ArchiveError("checkpoint: " + dir.string() + " holds " +
                           std::to_string(a.tensor_count()) + " tensors, expected " +
                           std::to_string(params.size()));
    for (const auto& p : params) {
        const auto& data = a.data(p.name);
        if (a.shape(p.name) != p.shape)
            throw ArchiveError("checkpoint: shape mismatch for '" + p.name + "' in " +
                               dir.string());
        *p.data = data;
    }
    return a.meta();
}

nlohmann::json read_archive_meta(const std::filesystem::path& dir) {
    return TensorArchive::load(dir).meta();
}

void replace_dir(const std::filesystem::path& tmp, const std::filesystem::path& final_dir) {
    std::filesystem::remove_all(final_dir);
    std::filesystem::rename(tmp, final_dir);
}

Generator load_generator_archive(const std::filesystem::path& path) {
    const auto dir =
        std::filesystem::exists(path / "generator" / "manifest.json") ? path / "generator" : path;
    if (!std::filesystem::exists(dir / "manifest.json"))
        throw ArchiveError("no generator weights found at " + path.string() +
                           " (expected a checkpoint directory or a weight archive)");
    const nlohmann::json meta = read_archive_meta(dir);
    Generator gen(GeneratorConfig::from_json(meta.at("config")),
                  meta.value("init_seed", std::uint64_t(0)));
    load_params(dir, gen.params());
    return gen;
}

}  // namespace ednig
