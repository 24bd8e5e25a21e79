#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "psipi/imaging.hpp"

/// Plain-text grid files, coincidence-map CSV and JSON metadata sidecars.
namespace psipi::io {

using nlohmann::json;

/// Real field on a ModeGrid, row-major.
struct GridField {
  imaging::ModeGrid grid;
  std::vector<double> values;
};

/// Shortest round-trip text form (%.17g).
std::string format_double(double value);

/// Header `psipi-grid v1 <dim> <nx> [ny]`, then ny lines of nx values.
void write_grid_file(const std::filesystem::path& path, const imaging::ModeGrid& grid, const std::vector<double>& values);
std::string grid_file_text(const imaging::ModeGrid& grid, const std::vector<double>& values);
GridField read_grid_file(const std::filesystem::path& path);

json grid_to_json(const imaging::ModeGrid& grid);
imaging::ModeGrid grid_from_json(const json& j);

/// Sidecar path of a map CSV: same stem, `.json` extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// 1D maps: N x N matrix, one row per line. 2D maps: header `x,y,xp,yp,value`
/// followed by every ordered pixel pair. `extra` is merged into the sidecar.
void write_map(const std::filesystem::path& csv_path, const imaging::CoincidenceMap& map, const json& extra = json::object());
std::string map_csv_text(const imaging::CoincidenceMap& map);
json map_metadata(const imaging::CoincidenceMap& map);
imaging::CoincidenceMap read_map(const std::filesystem::path& csv_path);

/// Column CSV with a header row.
void write_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns);
std::string columns_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace psipi::io
