#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "qcomb/pipeline.hpp"

namespace fixtures {

inline std::filesystem::path source_dir() { return QCOMB_SOURCE_DIR; }

inline const qcomb::RunConfig& reference_config() {
    static const qcomb::RunConfig cfg = qcomb::load_config(source_dir() / "configs" / "reference.json");
    return cfg;
}

inline const qcomb::RunConfig& ideal_config() {
    static const qcomb::RunConfig cfg = qcomb::load_config(source_dir() / "configs" / "ideal.json");
    return cfg;
}

inline const qcomb::JsaGrid& reference_jsa() {
    static const qcomb::JsaGrid jsa = qcomb::build_jsa(reference_config());
    return jsa;
}

inline const qcomb::JsaGrid& ideal_jsa() {
    static const qcomb::JsaGrid jsa = qcomb::build_jsa(ideal_config());
    return jsa;
}

/// Real JSA wrapping an arbitrary n x n matrix on a small grid.
inline qcomb::JsaGrid jsa_from_matrix(const std::vector<double>& m, std::size_t n) {
    const qcomb::FreqGrid1D axis(qcomb::Frequency{189.0}, 4.0, n);
    qcomb::JsaGrid j{qcomb::ComplexGrid(axis, axis), false};
    for (std::size_t k = 0; k < m.size(); ++k) j.amplitude.values()[k] = {m[k], 0.0};
    return j;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("qcomb_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures
