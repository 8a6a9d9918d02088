#ifndef OMSIM_CONFIG_HPP
#define OMSIM_CONFIG_HPP

#include <optional>
#include <string>

#include "omsim/grid.hpp"
#include "omsim/types.hpp"

// Flat INI-style configuration: sections [device], [probe], [feedback],
// [noise], [grid]; frequencies and gains in Hz, phases in degrees. The 2pi
// conversion happens exactly once, here. Unknown keys or sections are hard
// errors carrying the line number.
namespace omsim {

struct Config {
    OpmDevice device;
    ProbeTone probe;
    FeedbackFilter filter;
    std::optional<FeedbackChain> chain;  // optional chain_* keys in [feedback]
    NoiseBudget noise;
    GridOptions grid;
};

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(const std::string& what, int line_) : std::runtime_error(what), line(line_) {}
};

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

// Serializes in canonical key order; parse(serialize(c)) == c exactly.
std::string serialize_config(const Config& cfg);

// The device and operating point of the reference experiment.
Config reference_defaults();

}  // namespace omsim

#endif
