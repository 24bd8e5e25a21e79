#include "psipi/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace psipi::io {

namespace fs = std::filesystem;
using imaging::CoincidenceMap;
using imaging::ModeGrid;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

double parse_double(const std::string& token, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || errno == ERANGE)
    throw InvalidArgument(where + ": cannot parse number '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string grid_file_text(const ModeGrid& grid, const std::vector<double>& values) {
  grid.validate();
  if (values.size() != grid.pixel_count()) throw InvalidArgument("field size does not match its grid");
  std::string text = "psipi-grid v1 " + std::to_string(grid.dimension) + " " + std::to_string(grid.nx);
  if (grid.dimension == 2) text += " " + std::to_string(grid.ny);
  text += '\n';
  for (int y = 0; y < grid.ny; ++y) {
    for (int x = 0; x < grid.nx; ++x) {
      if (x) text += ' ';
      text += format_double(values[static_cast<std::size_t>(y) * grid.nx + x]);
    }
    text += '\n';
  }
  return text;
}

void write_grid_file(const fs::path& path, const ModeGrid& grid, const std::vector<double>& values) {
  write_text(path, grid_file_text(grid, values));
}

GridField read_grid_file(const fs::path& path) {
  std::istringstream in(read_text(path));
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(where + ": empty grid file");
  std::istringstream header(line);
  std::string magic, version;
  int dim = 0, nx = 0, ny = 1;
  header >> magic >> version >> dim >> nx;
  if (magic != "psipi-grid" || version != "v1" || !header)
    throw InvalidArgument(where + ": expected header 'psipi-grid v1 <dim> <nx> [ny]'");
  if (dim == 2 && !(header >> ny)) throw InvalidArgument(where + ": 2D grid header needs ny");
  std::string rest;
  if (header >> rest) throw InvalidArgument(where + ": trailing tokens in header");

  GridField field;
  field.grid = ModeGrid{dim, nx, ny, 10e-6, 1.0};
  field.grid.validate();
  std::string token;
  while (in >> token) field.values.push_back(parse_double(token, where));
  if (field.values.size() != field.grid.pixel_count())
    throw InvalidArgument(where + ": expected " + std::to_string(field.grid.pixel_count()) + " values, found " +
                          std::to_string(field.values.size()));
  return field;
}

json grid_to_json(const ModeGrid& grid) {
  return json{{"dimension", grid.dimension},
              {"nx", grid.nx},
              {"ny", grid.ny},
              {"pixel_pitch_m", grid.pixel_pitch},
              {"magnification", grid.magnification}};
}

ModeGrid grid_from_json(const json& j) {
  ModeGrid grid;
  grid.dimension = j.at("dimension").get<int>();
  grid.nx = j.at("nx").get<int>();
  grid.ny = j.value("ny", 1);
  grid.pixel_pitch = j.value("pixel_pitch_m", grid.pixel_pitch);
  grid.magnification = j.value("magnification", grid.magnification);
  grid.validate();
  return grid;
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

std::string map_csv_text(const CoincidenceMap& map) {
  const std::size_t n = map.pixels();
  if (map.values.size() != n * n) throw InvalidArgument("coincidence map size does not match its grid");
  std::string text;
  if (map.grid.dimension == 1) {
    text.reserve(n * n * 20);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        if (q) text += ',';
        text += format_double(map.at(p, q));
      }
      text += '\n';
    }
    return text;
  }
  const auto nx = static_cast<std::size_t>(map.grid.nx);
  text.reserve(n * n * 30);
  text += "x,y,xp,yp,value\n";
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      text += std::to_string(p % nx) + ',' + std::to_string(p / nx) + ',' + std::to_string(q % nx) + ',' +
              std::to_string(q / nx) + ',' + format_double(map.at(p, q)) + '\n';
    }
  return text;
}

json map_metadata(const CoincidenceMap& map) {
  json j{{"format", "psipi-map v1"},
         {"grid", grid_to_json(map.grid)},
         {"ports", imaging::to_string(map.ports)},
         {"lambda_signal_m", map.lambda_signal},
         {"lambda_idler_m", map.lambda_idler},
         {"normalization", map.normalization},
         {"model", map.model}};
  j["seed"] = map.seed ? json(*map.seed) : json(nullptr);
  return j;
}

void write_map(const fs::path& csv_path, const CoincidenceMap& map, const json& extra) {
  json meta = map_metadata(map);
  for (const auto& [key, value] : extra.items()) meta[key] = value;
  write_text(csv_path, map_csv_text(map));
  write_text(sidecar_path(csv_path), meta.dump(2) + "\n");
}

CoincidenceMap read_map(const fs::path& csv_path) {
  const fs::path meta_path = sidecar_path(csv_path);
  json meta;
  try {
    meta = json::parse(read_text(meta_path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(meta_path.string() + ": " + e.what());
  }
  CoincidenceMap map;
  try {
    if (meta.at("format") != "psipi-map v1") throw InvalidArgument(meta_path.string() + ": unknown map format");
    map.grid = grid_from_json(meta.at("grid"));
    map.ports = imaging::port_pair_from_string(meta.at("ports").get<std::string>());
    map.lambda_signal = meta.value("lambda_signal_m", map.lambda_signal);
    map.lambda_idler = meta.value("lambda_idler_m", map.lambda_idler);
    map.normalization = meta.value("normalization", map.normalization);
    map.model = meta.value("model", map.model);
    if (meta.contains("seed") && !meta["seed"].is_null()) map.seed = meta["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(meta_path.string() + ": " + e.what());
  }

  const std::size_t n = map.pixels();
  map.values.assign(n * n, 0.0);
  std::istringstream in(read_text(csv_path));
  const std::string where = csv_path.string();
  std::string line;
  if (map.grid.dimension == 1) {
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      if (row >= n) throw InvalidArgument(where + ": too many rows");
      auto cells = split(line, ',');
      if (cells.size() != n) throw InvalidArgument(where + ": row " + std::to_string(row + 1) + " has wrong width");
      for (std::size_t q = 0; q < n; ++q) map.at(row, q) = parse_double(cells[q], where);
      ++row;
    }
    if (row != n) throw InvalidArgument(where + ": expected " + std::to_string(n) + " rows");
    return map;
  }

  if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"x", "y", "xp", "yp", "value"})
    throw InvalidArgument(where + ": expected header x,y,xp,yp,value");
  std::vector<char> seen(n * n, 0);
  std::size_t count = 0;
  const auto nx = static_cast<std::size_t>(map.grid.nx);
  const auto ny = static_cast<std::size_t>(map.grid.ny);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split(line, ',');
    if (cells.size() != 5) throw InvalidArgument(where + ": rows need 5 columns");
    std::size_t idx[4];
    for (int k = 0; k < 4; ++k) {
      const double v = parse_double(cells[k], where);
      if (v < 0 || v != std::floor(v)) throw InvalidArgument(where + ": bad index '" + cells[k] + "'");
      idx[k] = static_cast<std::size_t>(v);
    }
    if (idx[0] >= nx || idx[2] >= nx || idx[1] >= ny || idx[3] >= ny)
      throw InvalidArgument(where + ": index outside the grid");
    const std::size_t p = idx[1] * nx + idx[0];
    const std::size_t q = idx[3] * nx + idx[2];
    if (seen[p * n + q]++) throw InvalidArgument(where + ": duplicate pixel pair");
    map.at(p, q) = parse_double(cells[4], where);
    ++count;
  }
  if (count != n * n) throw InvalidArgument(where + ": map is incomplete");
  return map;
}

std::string columns_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("column count does not match header");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw InvalidArgument("columns have different lengths");
  std::string text;
  for (std::size_t k = 0; k < header.size(); ++k) text += (k ? "," : "") + header[k];
  text += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (k) text += ',';
      text += format_double(columns[k][r]);
    }
    text += '\n';
  }
  return text;
}

void write_columns(const fs::path& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns) {
  write_text(path, columns_text(header, columns));
}

}  // namespace psipi::io
