#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lvbuddy/errors.hpp"

namespace lvbuddy {

// Customer group, 0..6 under the default UK mapping. Groups restrict the
// buddy search: a customer may only be assigned profiles of its own group.
using GroupId = int;

inline constexpr int kNumGroups = 7;
inline constexpr char kUnknownBand = '?';

struct CustomerAttributes {
    int profile_class = 1;              // Elexon domestic class, 1 or 2
    char council_tax_band = kUnknownBand; // 'A'..'H', '?' when not known
    bool has_pv = false;

    void validate() const {
        if (profile_class != 1 && profile_class != 2)
            throw GroupingError("profile class must be 1 or 2, got " +
                                std::to_string(profile_class));
        if (council_tax_band != kUnknownBand &&
            (council_tax_band < 'A' || council_tax_band > 'H'))
            throw GroupingError(std::string("council tax band must be A-H or '?', got '") +
                                council_tax_band + "'");
    }
};

// Deterministic (class, band, pv) -> group mapping. The default is the UK
// scheme below; deployments with different classifications can load their
// own rules from a CSV file. Rules are matched in order, first match wins.
//
//   group | class | band    | pv
//     0   |   1   | A, B, C | N
//     1   |   1   | D       | N
//     2   |   1   | E       | N
//     3   |   1   | F, G, H | N
//     4   |   2   | any     | N
//     5   |   2   | any     | Y
//     6   |   1   | any     | Y
class GroupMap {
public:
    struct Rule {
        int profile_class;
        char band;          // 'A'..'H', or '*' matching any band
        bool has_pv;
        GroupId group;
    };

    static const GroupMap& uk_default() {
        static const GroupMap map = make_uk_default();
        return map;
    }

    // CSV with header profile_class,council_tax_band,has_pv,group.
    // Band may be a letter A-H or '*'/'any'.
    static GroupMap from_csv(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw SchemaError("cannot open group map file " + path.string());
        GroupMap map;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line_no == 1 && line.rfind("profile_class", 0) == 0) continue;
            std::istringstream ss(line);
            std::string pc, band, pv, group;
            if (!std::getline(ss, pc, ',') || !std::getline(ss, band, ',') ||
                !std::getline(ss, pv, ',') || !std::getline(ss, group))
                throw SchemaError("group map " + path.string() + ":" +
                                  std::to_string(line_no) + ": expected 4 fields");
            Rule rule;
            try {
                rule.profile_class = std::stoi(pc);
                rule.group = std::stoi(group);
            } catch (const std::exception&) {
                throw SchemaError("group map " + path.string() + ":" +
                                  std::to_string(line_no) + ": bad integer field");
            }
            if (band == "*" || band == "any" || band == "Any" || band == "ANY")
                rule.band = '*';
            else if (band.size() == 1 && band[0] >= 'A' && band[0] <= 'H')
                rule.band = band[0];
            else
                throw SchemaError("group map " + path.string() + ":" +
                                  std::to_string(line_no) + ": bad band '" + band + "'");
            rule.has_pv = parse_pv_flag(pv, path.string(), line_no);
            if (rule.group < 0 || rule.group >= kNumGroups)
                throw SchemaError("group map " + path.string() + ":" +
                                  std::to_string(line_no) + ": group out of range 0-6");
            map.rules_.push_back(rule);
        }
        if (map.rules_.empty())
            throw SchemaError("group map " + path.string() + " has no rules");
        return map;
    }

    GroupId group_of(const CustomerAttributes& attrs) const {
        attrs.validate();
        for (const Rule& r : rules_) {
            if (r.profile_class != attrs.profile_class) continue;
            if (r.has_pv != attrs.has_pv) continue;
            if (r.band == '*' || r.band == attrs.council_tax_band) return r.group;
        }
        if (attrs.council_tax_band == kUnknownBand && fallback_group_) {
            warn("unknown council tax band for class " +
                 std::to_string(attrs.profile_class) +
                 " customer; falling back to group " + std::to_string(*fallback_group_));
            return *fallback_group_;
        }
        throw GroupingError(std::string("no group for class ") +
                            std::to_string(attrs.profile_class) + ", band '" +
                            attrs.council_tax_band + "', pv " +
                            (attrs.has_pv ? "Y" : "N"));
    }

    const std::vector<Rule>& rules() const { return rules_; }

private:
    static bool parse_pv_flag(const std::string& s, const std::string& origin,
                              std::size_t line_no) {
        if (s == "Y" || s == "y" || s == "1" || s == "true") return true;
        if (s == "N" || s == "n" || s == "0" || s == "false") return false;
        throw SchemaError("group map " + origin + ":" + std::to_string(line_no) +
                          ": bad pv flag '" + s + "'");
    }

    static GroupMap make_uk_default() {
        GroupMap map;
        map.rules_ = {
            {1, 'A', false, 0}, {1, 'B', false, 0}, {1, 'C', false, 0},
            {1, 'D', false, 1},
            {1, 'E', false, 2},
            {1, 'F', false, 3}, {1, 'G', false, 3}, {1, 'H', false, 3},
            {2, '*', false, 4},
            {2, '*', true, 5},
            {1, '*', true, 6},
        };
        // Unknown band, class 1, no PV: modal mid-band D (group 1), with a warning.
        map.fallback_group_ = 1;
        return map;
    }

    std::vector<Rule> rules_;
    std::optional<GroupId> fallback_group_;
};

inline GroupId assign_group(const CustomerAttributes& attrs) {
    return GroupMap::uk_default().group_of(attrs);
}

// Representative attributes per default group, used when serializing
// synthetic pools back into registry CSV form.
inline CustomerAttributes representative_attributes(GroupId group) {
    switch (group) {
        case 0: return {1, 'B', false};
        case 1: return {1, 'D', false};
        case 2: return {1, 'E', false};
        case 3: return {1, 'G', false};
        case 4: return {2, 'D', false};
        case 5: return {2, 'D', true};
        case 6: return {1, 'D', true};
        default:
            throw GroupingError("group id " + std::to_string(group) + " out of range 0-6");
    }
}

} // namespace lvbuddy
