#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sclab/classical_flow.hpp"
#include "sclab/ensemble_harness.hpp"
#include "sclab/error.hpp"
#include "sclab/phase_space.hpp"
#include "sclab/potential.hpp"
#include "sclab/propagator.hpp"
#include "sclab/test_function.hpp"

namespace sclab::cli {

using nlohmann::json;

// Raw config text, kept to anchor error messages to lines.
class Source {
public:
    static Source load(const std::filesystem::path& path);

    const std::string& name() const { return name_; }
    const json& document() const { return doc_; }
    // Line of the key path (best effort: the first matching "key": after the parent's).
    int line_of(const std::vector<std::string>& path) const;
    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const;

private:
    std::string name_;
    std::string text_;
    json doc_;
};

// A JSON object being consumed. Every read records the value (or the default
// used) into `resolved`, so the manifest lists the full effective config.
class Section {
public:
    Section(const Source& src, const json& node, std::vector<std::string> path, json& resolved);

    bool has(const std::string& key) const { return node_.contains(key); }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        seen_.insert(key);
        if (!node_.contains(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        return read<T>(key);
    }

    template <class T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) src_->fail(path_, "missing required key '" + key + "'" + where());
        return read<T>(key);
    }

    // Nested object; an absent key behaves as an empty object.
    Section child(const std::string& key);
    // Array of objects.
    std::vector<Section> children(const std::string& key);

    // Fixed-length coordinate vector of n entries.
    Coord coord(const std::string& key, int n, const Coord& fallback);
    Coord require_coord(const std::string& key, int n);

    // Rejects keys that were never read.
    void finish() const;
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

private:
    template <class T>
    T read(const std::string& key) {
        try {
            T v = node_.at(key).get<T>();
            resolved_[key] = v;
            return v;
        } catch (const json::exception&) {
            fail(key, "key '" + key + "'" + where() + " has the wrong type");
        }
    }
    std::string where() const;
    std::vector<std::string> sub(const std::string& key) const;

    const Source* src_;
    json node_;
    std::vector<std::string> path_;
    json& resolved_;
    std::set<std::string> seen_;
};

Potential parse_potential(Section s, int n);
SpatialGrid parse_grid(Section s, int n);
PropagatorConfig parse_propagator(Section s);
HusimiOptions parse_husimi(Section s, const HusimiOptions& defaults = {});
WignerOptions parse_wigner(Section s);
FlowConfig parse_flow(Section s);
Envelope parse_envelope(Section s);
TestFunction parse_test_function(Section s, int n);
LabelDensity parse_density(Section s, int n);
RandomFamily parse_family(Section s, int n, std::uint64_t seed);
// Reads experiment-level keys; propagator, husimi and flow come from their own sections.
ExperimentConfig parse_experiment(Section s);

struct InitialState {
    std::string kind = "coherent";  // coherent | packet
    Coord x0{0.0, 0.0}, p0{0.0, 0.0};
    double alpha = 0.5;
    Envelope envelope{EnvelopeKind::Gaussian, 1.0};
};

InitialState parse_initial(Section s, int n);
Wavefunction make_initial(const InitialState& init, const SpatialGrid& grid, double eps);

// key = value lines for a JSON tree, keys joined by '.', sorted.
void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out);
std::string format_number(double v);

}  // namespace sclab::cli
