#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "afcraman/analytic.hpp"
#include "afcraman/dynamics.hpp"
#include "afcraman/errors.hpp"
#include "afcraman/link.hpp"
#include "afcraman/optimize.hpp"

namespace afcraman {

// Minimal JSON document model with a byte-stable writer: object keys are
// kept sorted, floats are printed with 9 significant digits, non-finite
// floats become null. Parsing is out of scope here; reports only flow out.
class JsonValue {
public:
    using Array = std::vector<JsonValue>;
    using Object = std::map<std::string, JsonValue>;

    JsonValue() : kind_(Kind::null) {}
    JsonValue(bool b) : kind_(Kind::boolean), bool_(b) {}
    JsonValue(int v) : kind_(Kind::integer), int_(v) {}
    JsonValue(long v) : kind_(Kind::integer), int_(v) {}
    JsonValue(long long v) : kind_(Kind::integer), int_(v) {}
    JsonValue(double v) : kind_(Kind::real), real_(v) {}
    JsonValue(const char* s) : kind_(Kind::string), string_(s) {}
    JsonValue(std::string s) : kind_(Kind::string), string_(std::move(s)) {}
    JsonValue(Array a) : kind_(Kind::array), array_(std::move(a)) {}
    JsonValue(Object o) : kind_(Kind::object), object_(std::move(o)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }

    JsonValue& operator[](const std::string& key) {
        kind_ = Kind::object;
        return object_[key];
    }
    void push_back(JsonValue v) {
        kind_ = Kind::array;
        array_.push_back(std::move(v));
    }

    void write(std::ostream& os, int indent = 0) const {
        const std::string pad(2 * indent, ' ');
        const std::string pad_in(2 * (indent + 1), ' ');
        switch (kind_) {
            case Kind::null: os << "null"; break;
            case Kind::boolean: os << (bool_ ? "true" : "false"); break;
            case Kind::integer: os << int_; break;
            case Kind::real: os << format_real(real_); break;
            case Kind::string: os << quoted(string_); break;
            case Kind::array:
                if (array_.empty()) {
                    os << "[]";
                    break;
                }
                os << "[\n";
                for (std::size_t i = 0; i < array_.size(); ++i) {
                    os << pad_in;
                    array_[i].write(os, indent + 1);
                    os << (i + 1 < array_.size() ? ",\n" : "\n");
                }
                os << pad << "]";
                break;
            case Kind::object:
                if (object_.empty()) {
                    os << "{}";
                    break;
                }
                os << "{\n";
                {
                    std::size_t i = 0;
                    for (const auto& [key, value] : object_) {
                        os << pad_in << quoted(key) << ": ";
                        value.write(os, indent + 1);
                        os << (++i < object_.size() ? ",\n" : "\n");
                    }
                }
                os << pad << "}";
                break;
        }
    }

    std::string dump() const {
        std::ostringstream os;
        write(os);
        os << "\n";
        return os.str();
    }

    static std::string format_real(double v) {
        if (!std::isfinite(v)) return "null";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return buf;
    }

private:
    enum class Kind { null, boolean, integer, real, string, array, object };

    static std::string quoted(const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += "\"";
        return out;
    }

    Kind kind_;
    bool bool_ = false;
    long long int_ = 0;
    double real_ = 0.0;
    std::string string_;
    Array array_;
    Object object_;
};

// Full-precision float for CSV cells: round-trips exactly through parse.
inline std::string csv_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline JsonValue to_json(const WarningList& warnings) {
    auto arr = JsonValue::array();
    for (const auto& w : warnings) {
        auto obj = JsonValue::object();
        obj["code"] = w.code;
        obj["message"] = w.message;
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline JsonValue to_json(const EfficiencyReport& r) {
    auto obj = JsonValue::object();
    obj["p_stokes"] = r.p_stokes;
    obj["eta_readout"] = r.eta_readout;
    obj["noise_per_mode"] = r.noise_per_mode;
    obj["snr_lower_bound"] = r.snr_lower_bound;
    obj["echo_time_s"] = r.echo_time_s;
    obj["mode_capacity"] = r.mode_capacity;
    obj["photons_per_write_attempt"] = r.photons_per_write_attempt;
    obj["warnings"] = to_json(r.warnings);
    return obj;
}

inline JsonValue to_json(const LinkReport& r) {
    auto obj = JsonValue::object();
    obj["eta_t"] = r.eta_t;
    obj["entangle_time_s"] = r.entangle_time_s;
    obj["fidelity"] = r.fidelity;
    return obj;
}

inline JsonValue to_json(const OptimizationResult& r) {
    auto obj = JsonValue::object();
    obj["objective"] = r.objective;
    obj["alpha_l"] = r.alpha_l;
    obj["f_star"] = r.f_star;
    obj["eta_star"] = r.eta_star;
    const char* boundary = r.boundary == BoundaryHit::none
                               ? "none"
                               : (r.boundary == BoundaryHit::lower ? "lower" : "upper");
    obj["boundary"] = boundary;
    auto scan = JsonValue::object();
    scan["f_min"] = r.f_min;
    scan["f_max"] = r.f_max;
    scan["coarse_points"] = r.coarse_points;
    scan["tolerance"] = r.tolerance;
    obj["scan"] = std::move(scan);
    return obj;
}

inline JsonValue to_json(const MaterialPreset& m) {
    auto obj = JsonValue::object();
    obj["name"] = m.name;
    obj["gamma_fwhm_hz"] = m.gamma_fwhm_hz;
    obj["big_gamma_span_hz"] = m.big_gamma_span_hz;
    obj["alpha_l"] = m.alpha_l;
    obj["wavelength_nm"] = m.wavelength_nm;
    obj["attenuation_db_per_km"] = m.attenuation_db_per_km;
    return obj;
}

inline JsonValue to_json(const FeasibilityReport& r) {
    auto obj = JsonValue::object();
    obj["comb"] = to_json(r.comb);
    obj["link"] = to_json(r.link);
    obj["heralds_needed"] = r.heralds_needed;
    obj["tomography_time_s"] = r.tomography_time_s;
    obj["phase_stabilization_required"] = r.phase_stabilization_required;
    obj["warnings"] = to_json(r.warnings);
    return obj;
}

inline void trace_to_csv(const FieldTrace& trace, std::ostream& os) {
    os << "t_seconds,flux,direction\n";
    const std::string tag = to_string(trace.direction);
    for (std::size_t i = 0; i < trace.times_s.size(); ++i)
        os << csv_real(trace.times_s[i]) << ',' << csv_real(trace.flux[i]) << ',' << tag
           << '\n';
}

inline JsonValue to_json(const FieldTrace& trace) {
    auto obj = JsonValue::object();
    obj["direction"] = to_string(trace.direction);
    obj["mode_window_s"] = trace.mode_window_s;
    obj["peak_time_s"] = trace.peak_time_s;
    obj["peak_flux"] = trace.peak_flux;
    obj["mode_counts"] = trace.mode_counts;
    obj["peak_mode_efficiency"] = trace.peak_mode_efficiency();
    auto times = JsonValue::array();
    auto flux = JsonValue::array();
    for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
        times.push_back(trace.times_s[i]);
        flux.push_back(trace.flux[i]);
    }
    obj["times_s"] = std::move(times);
    obj["flux"] = std::move(flux);
    return obj;
}

}  // namespace afcraman
