#ifndef OMSIM_CSVIO_HPP
#define OMSIM_CSVIO_HPP

#include <string>
#include <vector>

#include "omsim/config.hpp"
#include "omsim/linsolve.hpp"

namespace omsim {

inline constexpr const char* version_string = "omsim 1.0.0";

struct CsvOptions {
    bool timestamp = true;  // emit a # generated_at line
};

// Spectrum CSV: # metadata (version, resolved config, optional timestamp),
// then "freq_hz,value_quanta" rows. Readable by fitting::read_spectrum_csv.
void write_spectrum_csv(const linsolve::Spectrum& s, const Config& cfg,
                        const std::string& path, const CsvOptions& opt = {});

// Generic table with one header row; same metadata block.
void write_table_csv(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, const Config& cfg,
                     const std::string& path, const CsvOptions& opt = {});

}  // namespace omsim

#endif
