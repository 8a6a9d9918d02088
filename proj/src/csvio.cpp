#include "omsim/csvio.hpp"

#include <cstdio>
#include <ctime>
#include <sstream>
#include <stdexcept>

namespace omsim {

namespace {

void write_metadata(std::FILE* f, const Config& cfg, const CsvOptions& opt) {
    std::fprintf(f, "# %s\n", version_string);
    if (opt.timestamp) {
        std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        std::fprintf(f, "# generated_at = %s\n", buf);
    }
    std::istringstream cfg_lines(serialize_config(cfg));
    std::string line;
    while (std::getline(cfg_lines, line))
        if (!line.empty()) std::fprintf(f, "# %s\n", line.c_str());
}

}  // namespace

void write_spectrum_csv(const linsolve::Spectrum& s, const Config& cfg,
                        const std::string& path, const CsvOptions& opt) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_metadata(f, cfg, opt);
    std::fprintf(f, "freq_hz,value_quanta\n");
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        std::fprintf(f, "%.12g,%.12g\n", rad_to_hz(s.grid.points[i]), s.values[i]);
    std::fclose(f);
}

void write_table_csv(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, const Config& cfg,
                     const std::string& path, const CsvOptions& opt) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_metadata(f, cfg, opt);
    for (std::size_t i = 0; i < columns.size(); ++i)
        std::fprintf(f, "%s%s", columns[i].c_str(), i + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
        if (row.size() != columns.size()) {
            std::fclose(f);
            throw std::invalid_argument("row width does not match column count");
        }
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(f, "%.12g%s", row[i], i + 1 < row.size() ? "," : "\n");
    }
    std::fclose(f);
}

}  // namespace omsim
