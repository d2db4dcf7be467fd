#include "dvcg/instance_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dvcg/rng.hpp"

namespace dvcg {

namespace {

TabularMdp make_m2_mdp() {
    // action 0 keeps the state, action 1 swaps it; both steps.
    TransitionTable p(2, 2, 2, 0.0);
    for (int h = 0; h < 2; ++h)
        for (int s = 0; s < 2; ++s) {
            p(h, s, 0, s) = 1.0;
            p(h, s, 1, 1 - s) = 1.0;
        }
    return TabularMdp(2, 2, 2, std::move(p), 0);
}

Grid3 indicator_state(int horizon, int num_states, int num_actions, int state) {
    Grid3 g(horizon, num_states, num_actions, 0.0);
    for (int h = 0; h < horizon; ++h)
        for (int a = 0; a < num_actions; ++a) g(h, state, a) = 1.0;
    return g;
}

}  // namespace

Instance make_m2_n1() {
    TabularMdp mdp = make_m2_mdp();
    Grid3 seller(2, 2, 2, 0.0);
    std::vector<Grid3> agents;
    agents.push_back(indicator_state(2, 2, 2, 1));
    RewardProfile actual(1.0, std::move(seller), std::move(agents), RewardRole::Actual);
    return Instance{"m2_n1", std::move(mdp), std::move(actual)};
}

Instance make_m2_n2() {
    TabularMdp mdp = make_m2_mdp();
    Grid3 seller(2, 2, 2, 0.0);
    std::vector<Grid3> agents;
    agents.push_back(indicator_state(2, 2, 2, 1));
    agents.push_back(indicator_state(2, 2, 2, 0));
    // The zero seller reward needs r_max >= n for its admissible band.
    RewardProfile actual(2.0, std::move(seller), std::move(agents), RewardRole::Actual);
    return Instance{"m2_n2", std::move(mdp), std::move(actual)};
}

Instance random_instance(const RandomInstanceSpec& spec) {
    if (spec.num_states < 1 || spec.num_actions < 1 || spec.horizon < 1 || spec.num_agents < 1)
        throw std::invalid_argument("random_instance: dimensions must be positive");
    const int S = spec.num_states, A = spec.num_actions, H = spec.horizon, n = spec.num_agents;
    double r_max = spec.r_max > 0.0 ? spec.r_max : std::max(1.0, static_cast<double>(n));
    if (r_max < 1.0 || 2.0 * r_max < n)
        throw std::invalid_argument("random_instance: r_max too small for this profile");

    Rng rng = Rng::derive(spec.seed, {0x696e7374ULL});
    TransitionTable p(H, S, A, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double sum = 0.0;
                for (int sp = 0; sp < S; ++sp) {
                    double e = -std::log(1.0 - rng.uniform());
                    p(h, s, a, sp) = e;
                    sum += e;
                }
                for (int sp = 0; sp < S; ++sp) p(h, s, a, sp) /= sum;
            }
    int s0 = rng.uniform_int(S);
    TabularMdp mdp(S, A, H, std::move(p), s0);

    std::vector<Grid3> agents;
    agents.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Grid3 g(H, S, A, 0.0);
        for (double& v : g.data()) v = rng.uniform();
        agents.push_back(std::move(g));
    }
    Grid3 seller(H, S, A, 0.0);
    for (double& v : seller.data()) v = rng.uniform(-r_max, r_max - n);
    RewardProfile actual(r_max, std::move(seller), std::move(agents), RewardRole::Actual);

    std::ostringstream name;
    name << "random_S" << S << "A" << A << "H" << H << "n" << n << "_seed" << spec.seed;
    return Instance{name.str(), std::move(mdp), std::move(actual)};
}

StagePolicy random_policy(const MdpShape& shape, Rng& rng) {
    Grid3 p(shape.horizon, shape.num_states, shape.num_actions, 0.0);
    for (int h = 0; h < shape.horizon; ++h)
        for (int s = 0; s < shape.num_states; ++s) {
            double sum = 0.0;
            for (int a = 0; a < shape.num_actions; ++a) {
                double e = -std::log(1.0 - rng.uniform());
                p(h, s, a) = e;
                sum += e;
            }
            for (int a = 0; a < shape.num_actions; ++a) p(h, s, a) /= sum;
        }
    return StagePolicy(std::move(p));
}

Grid3 random_boxed_q(const MdpShape& shape, double r_max, Rng& rng) {
    Grid3 q(shape.horizon, shape.num_states, shape.num_actions, 0.0);
    for (int h = 0; h < shape.horizon; ++h) {
        double edge = QTable::box_halfwidth(h, shape.horizon, r_max);
        for (int s = 0; s < shape.num_states; ++s)
            for (int a = 0; a < shape.num_actions; ++a) q(h, s, a) = rng.uniform(-edge, edge);
    }
    return q;
}

namespace {

nlohmann::json grid_to_json(const Grid3& g) {
    nlohmann::json out = nlohmann::json::array();
    for (int h = 0; h < g.horizon(); ++h) {
        nlohmann::json layer = nlohmann::json::array();
        for (int s = 0; s < g.num_states(); ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (int a = 0; a < g.num_actions(); ++a) row.push_back(g(h, s, a));
            layer.push_back(std::move(row));
        }
        out.push_back(std::move(layer));
    }
    return out;
}

Grid3 grid_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw std::runtime_error(std::string("instance: ") + what + " must be a [h][s][a] array");
    int H = static_cast<int>(j.size());
    int S = static_cast<int>(j.at(0).size());
    int A = static_cast<int>(j.at(0).at(0).size());
    Grid3 g(H, S, A, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                g(h, s, a) = j.at(h).at(s).at(a).get<double>();
    return g;
}

}  // namespace

void save_instance(const Instance& instance, const std::filesystem::path& path) {
    const TabularMdp& mdp = instance.mdp;
    nlohmann::json j;
    j["schema_version"] = 1;
    j["name"] = instance.name;
    j["S"] = mdp.num_states();
    j["A"] = mdp.num_actions();
    j["H"] = mdp.horizon();
    j["s0"] = mdp.initial_state();
    j["n"] = instance.actual.num_agents();
    j["r_max"] = instance.actual.r_max();
    nlohmann::json trans = nlohmann::json::array();
    for (int h = 0; h < mdp.horizon(); ++h) {
        nlohmann::json layer = nlohmann::json::array();
        for (int s = 0; s < mdp.num_states(); ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (int a = 0; a < mdp.num_actions(); ++a) {
                nlohmann::json dist = nlohmann::json::array();
                for (int sp = 0; sp < mdp.num_states(); ++sp)
                    dist.push_back(mdp.transition()(h, s, a, sp));
                row.push_back(std::move(dist));
            }
            layer.push_back(std::move(row));
        }
        trans.push_back(std::move(layer));
    }
    j["transition"] = std::move(trans);
    j["seller_reward"] = grid_to_json(instance.actual.seller());
    nlohmann::json agents = nlohmann::json::array();
    for (int i = 0; i < instance.actual.num_agents(); ++i)
        agents.push_back(grid_to_json(instance.actual.agent(i)));
    j["agent_rewards"] = std::move(agents);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_instance: cannot open " + path.string());
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("save_instance: write failed for " + path.string());
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_instance: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        std::ostringstream msg;
        msg << "load_instance: parse error in " << path.string() << " at byte " << e.byte << ": "
            << e.what();
        throw std::runtime_error(msg.str());
    }
    const int S = j.at("S").get<int>();
    const int A = j.at("A").get<int>();
    const int H = j.at("H").get<int>();
    const int s0 = j.at("s0").get<int>();
    const int n = j.at("n").get<int>();
    const double r_max = j.at("r_max").get<double>();

    TransitionTable p(H, S, A, 0.0);
    const auto& trans = j.at("transition");
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (int sp = 0; sp < S; ++sp)
                    p(h, s, a, sp) = trans.at(h).at(s).at(a).at(sp).get<double>();
    TabularMdp mdp(S, A, H, std::move(p), s0);

    Grid3 seller = grid_from_json(j.at("seller_reward"), "seller_reward");
    std::vector<Grid3> agents;
    agents.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        agents.push_back(grid_from_json(j.at("agent_rewards").at(i), "agent_rewards"));
    RewardProfile actual(r_max, std::move(seller), std::move(agents), RewardRole::Actual);
    return Instance{j.value("name", path.stem().string()), std::move(mdp), std::move(actual)};
}

}  // namespace dvcg
