#include "bpre/env_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bpre {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::string_view where) {
    if (!obj.is_object()) {
        throw Error(ErrorKind::ParseError, std::string(where) + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw Error(ErrorKind::ParseError,
                        "unknown key '" + key + "' in " + std::string(where));
        }
    }
}

double number(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key) || !obj.at(key).is_number()) {
        throw Error(ErrorKind::ParseError,
                    std::string(where) + " needs numeric '" + key + "'");
    }
    return obj.at(key).get<double>();
}

OffspringLaw parse_fl(const json& block) {
    reject_unknown(block, {"a0", "b0", "M"}, "fractional_linear");
    FractionalLinearParams p;
    p.a0 = number(block, "a0", "fractional_linear");
    p.b0 = number(block, "b0", "fractional_linear");
    if (block.contains("M")) {
        if (!block.at("M").is_number_integer() || block.at("M").get<long long>() < 1) {
            throw Error(ErrorKind::ParseError, "fractional_linear.M must be a positive integer");
        }
        p.max_offspring = block.at("M").get<std::size_t>();
    }
    return fractional_linear_law(p);
}

OffspringLaw parse_pmf(const json& arr) {
    if (!arr.is_array()) throw Error(ErrorKind::ParseError, "pmf must be an array");
    std::vector<double> pmf;
    for (const auto& v : arr) {
        if (!v.is_number()) throw Error(ErrorKind::ParseError, "pmf entries must be numbers");
        pmf.push_back(v.get<double>());
    }
    return make_offspring_law(std::move(pmf));
}

}  // namespace

EnvironmentModel parse_environment(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    reject_unknown(doc, {"name", "atoms", "fractional_linear"}, "environment");
    const bool has_atoms = doc.contains("atoms");
    const bool has_fl = doc.contains("fractional_linear");
    if (has_atoms == has_fl) {
        throw Error(ErrorKind::ParseError,
                    "environment needs exactly one of 'atoms' or 'fractional_linear'");
    }
    if (has_fl) return EnvironmentModel::single(parse_fl(doc.at("fractional_linear")));

    const auto& arr = doc.at("atoms");
    if (!arr.is_array() || arr.empty()) {
        throw Error(ErrorKind::ParseError, "'atoms' must be a nonempty array");
    }
    std::vector<EnvironmentAtom> atoms;
    for (const auto& a : arr) {
        reject_unknown(a, {"weight", "pmf", "fractional_linear"}, "atom");
        const double w = number(a, "weight", "atom");
        if (a.contains("pmf") == a.contains("fractional_linear")) {
            throw Error(ErrorKind::ParseError, "atom needs exactly one of 'pmf' or 'fractional_linear'");
        }
        atoms.push_back({w, a.contains("pmf") ? parse_pmf(a.at("pmf"))
                                              : parse_fl(a.at("fractional_linear"))});
    }
    return EnvironmentModel(std::move(atoms));
}

EnvironmentModel load_environment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open environment file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_environment(ss.str());
}

std::string environment_to_json(const EnvironmentModel& env) {
    json atoms = json::array();
    for (const auto& a : env.atoms()) {
        json entry{{"weight", a.weight}};
        if (const auto& fl = a.law.fractional_linear()) {
            entry["fractional_linear"] = {{"a0", fl->a0}, {"b0", fl->b0}, {"M", fl->max_offspring}};
        } else {
            entry["pmf"] = std::vector<double>(a.law.pmf().begin(), a.law.pmf().end());
        }
        atoms.push_back(std::move(entry));
    }
    return json{{"atoms", atoms}}.dump();
}

}  // namespace bpre
