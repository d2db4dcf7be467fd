#include "dvcg/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dvcg/rng.hpp"

namespace dvcg {

OfflineDataset::OfflineDataset(MdpShape shape, int num_agents, double r_max, long k,
                               std::vector<std::vector<Transition>> tuples,
                               DatasetProvenance provenance)
    : shape_(shape), n_(num_agents), r_max_(r_max), k_(k), tuples_(std::move(tuples)),
      provenance_(provenance) {
    if (k_ < 0) throw std::invalid_argument("OfflineDataset: negative sample count");
    if (tuples_.size() != static_cast<size_t>(shape_.horizon))
        throw std::invalid_argument("OfflineDataset: tuple table must have one row per step");
    for (const auto& row : tuples_) {
        if (row.size() != static_cast<size_t>(k_))
            throw std::invalid_argument("OfflineDataset: step row length differs from K");
        for (const auto& t : row) {
            if (t.state < 0 || t.state >= shape_.num_states ||
                t.next_state < 0 || t.next_state >= shape_.num_states ||
                t.action < 0 || t.action >= shape_.num_actions)
                throw std::invalid_argument("OfflineDataset: index out of range");
            if (t.reported.size() != static_cast<size_t>(n_))
                throw std::invalid_argument("OfflineDataset: reported reward count mismatch");
            for (double v : t.reported)
                if (v < 0.0 || v > 1.0)
                    throw std::invalid_argument("OfflineDataset: reported reward outside [0, 1]");
        }
    }
}

void RewardSelector::validate(int num_agents) const {
    if (kind_ == Kind::Total) return;
    if (agent_ < 0 || agent_ >= num_agents)
        throw std::invalid_argument("RewardSelector: agent index out of range");
    if (kind_ == Kind::SinglePlus && actual_.empty())
        throw std::invalid_argument("RewardSelector: SinglePlus needs the actual reward table");
}

OfflineDataset sample_dataset(const TabularMdp& mdp, const RewardProfile& reported,
                              const DataDistribution& dist, long k, uint64_t seed,
                              double noise_magnitude) {
    const MdpShape shape = mdp.shape();
    if (dist.table().horizon() != shape.horizon ||
        dist.table().num_states() != shape.num_states ||
        dist.table().num_actions() != shape.num_actions)
        throw std::invalid_argument("sample_dataset: distribution shape mismatch");
    if (reported.horizon() != shape.horizon || reported.num_states() != shape.num_states ||
        reported.num_actions() != shape.num_actions)
        throw std::invalid_argument("sample_dataset: profile shape mismatch");
    if (k < 0) throw std::invalid_argument("sample_dataset: negative K");

    const int S = shape.num_states, A = shape.num_actions, n = reported.num_agents();
    std::vector<std::vector<Transition>> tuples(static_cast<size_t>(shape.horizon));
    for (int h = 0; h < shape.horizon; ++h) {
        auto& row = tuples[static_cast<size_t>(h)];
        row.resize(static_cast<size_t>(k));
        // Flattened (s, a) probabilities for this step, in (s * A + a) order.
        std::vector<double> cell_probs(static_cast<size_t>(S) * A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                cell_probs[static_cast<size_t>(s) * A + a] = dist(h, s, a);
        for (long tau = 0; tau < k; ++tau) {
            Rng rng = Rng::derive(seed, {static_cast<uint64_t>(h), static_cast<uint64_t>(tau)});
            int cell = rng.categorical(cell_probs);
            int s = cell / A, a = cell % A;
            int sp = rng.categorical(mdp.transition().row(h, s, a));
            Transition t;
            t.state = s;
            t.action = a;
            t.next_state = sp;
            t.reported.resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double v = reported.agent(i)(h, s, a);
                if (noise_magnitude > 0.0)
                    v = std::clamp(v + rng.uniform(-noise_magnitude, noise_magnitude), 0.0, 1.0);
                t.reported[static_cast<size_t>(i)] = v;
            }
            row[static_cast<size_t>(tau)] = std::move(t);
        }
    }
    DatasetProvenance prov;
    prov.seed = seed;
    prov.mu_source = "supplied";
    prov.noise_magnitude = noise_magnitude;
    return OfflineDataset(shape, n, reported.r_max(), k, std::move(tuples), prov);
}

std::vector<std::vector<double>> aggregate_rewards(const OfflineDataset& dataset,
                                                   const RewardProfile& reported,
                                                   const RewardSelector& selector) {
    selector.validate(dataset.num_agents());
    const int H = dataset.shape().horizon;
    const int n = dataset.num_agents();
    std::vector<std::vector<double>> out(static_cast<size_t>(H));
    for (int h = 0; h < H; ++h) {
        const auto& row = dataset.step(h);
        auto& vals = out[static_cast<size_t>(h)];
        vals.resize(row.size());
        for (size_t tau = 0; tau < row.size(); ++tau) {
            const Transition& t = row[tau];
            double r = reported.seller()(h, t.state, t.action);
            for (int i = 0; i < n; ++i) {
                if (selector.kind() != RewardSelector::Kind::Total && i == selector.agent())
                    continue;
                r += t.reported[static_cast<size_t>(i)];
            }
            if (selector.kind() == RewardSelector::Kind::SinglePlus)
                r += selector.actual_reward()(h, t.state, t.action);
            vals[tau] = r;
        }
    }
    return out;
}

VisitationMeasure empirical_visitation(const OfflineDataset& dataset) {
    if (dataset.num_samples() == 0)
        throw std::invalid_argument("empirical_visitation: dataset is empty");
    const MdpShape& shape = dataset.shape();
    Grid3 d(shape.horizon, shape.num_states, shape.num_actions, 0.0);
    const double w = 1.0 / static_cast<double>(dataset.num_samples());
    for (int h = 0; h < shape.horizon; ++h)
        for (const Transition& t : dataset.step(h)) d(h, t.state, t.action) += w;
    return VisitationMeasure(std::move(d));
}

namespace {

// Full-precision decimal that round-trips IEEE doubles.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());
    const MdpShape& shape = dataset.shape();
    out << "{\"S\":" << shape.num_states << ",\"A\":" << shape.num_actions
        << ",\"H\":" << shape.horizon << ",\"s0\":" << shape.initial_state
        << ",\"n\":" << dataset.num_agents() << ",\"K\":" << dataset.num_samples()
        << ",\"seed\":" << dataset.provenance().seed
        << ",\"r_max\":" << fmt_double(dataset.r_max())
        << ",\"mu_source\":\"" << dataset.provenance().mu_source << "\""
        << ",\"noise\":" << fmt_double(dataset.provenance().noise_magnitude) << "}\n";
    for (int h = 0; h < shape.horizon; ++h) {
        const auto& row = dataset.step(h);
        for (size_t tau = 0; tau < row.size(); ++tau) {
            const Transition& t = row[tau];
            out << "{\"h\":" << h << ",\"tau\":" << tau << ",\"s\":" << t.state
                << ",\"a\":" << t.action << ",\"r\":[";
            for (size_t i = 0; i < t.reported.size(); ++i) {
                if (i) out << ',';
                out << fmt_double(t.reported[i]);
            }
            out << "],\"sp\":" << t.next_state << "}\n";
        }
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());
    std::string line;
    long line_no = 0;

    auto parse_line = [&](const std::string& text) {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            std::ostringstream msg;
            msg << "load_dataset: parse error at " << path.string() << ":" << line_no
                << " offset " << e.byte << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    };

    if (!std::getline(in, line))
        throw std::runtime_error("load_dataset: missing header line in " + path.string());
    ++line_no;
    nlohmann::json header = parse_line(line);
    MdpShape shape{header.at("S").get<int>(), header.at("A").get<int>(),
                   header.at("H").get<int>(), header.at("s0").get<int>()};
    const int n = header.at("n").get<int>();
    const long k = header.at("K").get<long>();
    DatasetProvenance prov;
    prov.seed = header.at("seed").get<uint64_t>();
    prov.mu_source = header.value("mu_source", std::string("unknown"));
    prov.noise_magnitude = header.value("noise", 0.0);
    const double r_max = header.at("r_max").get<double>();

    std::vector<std::vector<Transition>> tuples(static_cast<size_t>(shape.horizon));
    for (auto& row : tuples) row.resize(static_cast<size_t>(k));
    std::vector<std::vector<bool>> filled(static_cast<size_t>(shape.horizon),
                                          std::vector<bool>(static_cast<size_t>(k), false));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec = parse_line(line);
        int h = rec.at("h").get<int>();
        long tau = rec.at("tau").get<long>();
        if (h < 0 || h >= shape.horizon || tau < 0 || tau >= k) {
            std::ostringstream msg;
            msg << "load_dataset: record out of range at " << path.string() << ":" << line_no;
            throw std::runtime_error(msg.str());
        }
        Transition t;
        t.state = rec.at("s").get<int>();
        t.action = rec.at("a").get<int>();
        t.next_state = rec.at("sp").get<int>();
        t.reported = rec.at("r").get<std::vector<double>>();
        tuples[static_cast<size_t>(h)][static_cast<size_t>(tau)] = std::move(t);
        filled[static_cast<size_t>(h)][static_cast<size_t>(tau)] = true;
    }
    for (int h = 0; h < shape.horizon; ++h)
        for (long tau = 0; tau < k; ++tau)
            if (!filled[static_cast<size_t>(h)][static_cast<size_t>(tau)]) {
                std::ostringstream msg;
                msg << "load_dataset: missing record (h=" << h << ", tau=" << tau << ") in "
                    << path.string();
                throw std::runtime_error(msg.str());
            }
    return OfflineDataset(shape, n, r_max, k, std::move(tuples), prov);
}

}  // namespace dvcg
