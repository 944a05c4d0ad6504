#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mmm/posterior.hpp"

namespace mmm {

inline constexpr int kFitFormatVersion = 1;

/// JSON text for a fit. Deterministic: equal fits give equal bytes.
/// Non-finite numbers are written as the strings "NaN", "Infinity", "-Infinity".
std::string fit_to_json(const FitResult &fit);
FitResult fit_from_json(std::string_view text);

void save_fit(const FitResult &fit, const std::filesystem::path &path);
FitResult load_fit(const std::filesystem::path &path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);
std::string read_file(const std::filesystem::path &path);

}  // namespace mmm
