#include "eqperf/analyze.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "eqperf/common.hpp"
#include "eqperf/rules.hpp"

namespace eqperf {

using nlohmann::json;

namespace {

std::vector<std::vector<int>> report_rule_lists(const std::filesystem::path& findings_dir) {
    std::vector<std::filesystem::path> files;
    std::filesystem::path reports = findings_dir / "reports";
    if (std::filesystem::is_directory(reports)) {
        for (const auto& entry : std::filesystem::directory_iterator(reports)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<std::vector<int>> out;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) continue;
        try {
            json j = json::parse(in);
            std::vector<int> ids = j.value("fired_rule_ids", std::vector<int>{});
            out.push_back(std::move(ids));
        } catch (const json::exception&) {
            throw Error(ErrorKind::MalformedReport, "cannot parse report " + f.string());
        }
    }
    return out;
}

}  // namespace

std::vector<RuleStat> rule_stats(const std::filesystem::path& findings_dir) {
    std::map<int, RuleStat> by_id;
    for (const auto& r : rule_catalog()) by_id[r.id].rule_id = r.id;

    std::filesystem::path stats_path = findings_dir / "stats.json";
    if (std::filesystem::exists(stats_path)) {
        std::ifstream in(stats_path, std::ios::binary);
        try {
            json j = json::parse(in);
            if (j.contains("rule_activations")) {
                for (const auto& [key, value] : j["rule_activations"].items()) {
                    int id = std::stoi(key);
                    by_id[id].rule_id = id;
                    by_id[id].activations = value.get<int64_t>();
                }
            }
        } catch (const json::exception&) {
            throw Error(ErrorKind::MalformedReport, "cannot parse " + stats_path.string());
        }
    }

    for (const auto& ids : report_rule_lists(findings_dir)) {
        std::set<int> uniq(ids.begin(), ids.end());
        for (int id : uniq) {
            by_id[id].rule_id = id;
            ++by_id[id].confirmed_bugs;
        }
    }

    std::vector<RuleStat> out;
    for (const auto& [id, st] : by_id) out.push_back(st);
    return out;
}

CoOccurrence rule_cooccurrence(const std::filesystem::path& findings_dir) {
    auto lists = report_rule_lists(findings_dir);
    std::set<int> ids;
    for (const auto& l : lists) ids.insert(l.begin(), l.end());

    CoOccurrence co;
    co.rule_ids.assign(ids.begin(), ids.end());
    size_t n = co.rule_ids.size();
    co.counts.assign(n, std::vector<int64_t>(n, 0));
    auto index_of = [&](int id) {
        return static_cast<size_t>(
            std::lower_bound(co.rule_ids.begin(), co.rule_ids.end(), id) - co.rule_ids.begin());
    };
    for (const auto& l : lists) {
        std::set<int> uniq(l.begin(), l.end());
        for (int a : uniq) {
            for (int b : uniq) {
                ++co.counts[index_of(a)][index_of(b)];
            }
        }
    }
    return co;
}

std::string rule_stats_table(const std::vector<RuleStat>& stats) {
    std::ostringstream out;
    out << "rule  name                           activations  confirmed\n";
    for (const auto& st : stats) {
        const MutationRule* r = find_rule(st.rule_id);
        std::string name = r ? r->name : (st.rule_id == 999 ? "ternary-partition" : "?");
        char line[128];
        std::snprintf(line, sizeof(line), "%4d  %-30s %11lld %10lld\n", st.rule_id, name.c_str(),
                      static_cast<long long>(st.activations),
                      static_cast<long long>(st.confirmed_bugs));
        out << line;
    }
    return out.str();
}

std::string cooccurrence_table(const CoOccurrence& co) {
    std::ostringstream out;
    out << "rule";
    for (int id : co.rule_ids) out << '\t' << id;
    out << '\n';
    for (size_t i = 0; i < co.rule_ids.size(); ++i) {
        out << co.rule_ids[i];
        for (size_t j = 0; j < co.rule_ids.size(); ++j) out << '\t' << co.counts[i][j];
        out << '\n';
    }
    return out.str();
}

}  // namespace eqperf
