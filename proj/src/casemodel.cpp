#include "wirtstab/casemodel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wirtstab::casemodel {

using numerics::Complex;
using json = nlohmann::ordered_json;

const BusRecord& NetworkCase::bus(int id) const {
    for (const auto& b : buses)
        if (b.id == id)
            return b;
    throw SemanticError("unknown bus id " + std::to_string(id));
}

int NetworkCase::slack_id() const {
    for (const auto& b : buses)
        if (b.role == BusRole::Slack)
            return b.id;
    throw SemanticError("case has no slack bus");
}

Complex NetworkCase::scheduled_injection(int id) const {
    const auto& b = bus(id);
    Complex s(-b.p_load, -b.q_load);
    for (const auto& g : generators)
        if (g.bus == id)
            s += Complex(g.p_set, g.q_set);
    return s;
}

std::size_t AdmittanceMatrix::index(int bus_id) const {
    const auto it = index_map.find(bus_id);
    if (it == index_map.end())
        throw SemanticError("bus " + std::to_string(bus_id) + " not in admittance matrix");
    return it->second;
}

std::string to_string(BusRole r) {
    switch (r) {
    case BusRole::Slack: return "slack";
    case BusRole::PQ: return "pq";
    case BusRole::PV: return "pv";
    }
    return "?";
}

std::string to_string(ModeHint m) {
    return m == ModeHint::GridFollowingPQ ? "grid_following" : "grid_forming";
}

void validate(const NetworkCase& c) {
    if (!(c.base_power > 0.0))
        throw SemanticError("base power must be positive");
    std::set<int> ids;
    int slacks = 0;
    for (const auto& b : c.buses) {
        if (!ids.insert(b.id).second)
            throw SemanticError("duplicate bus id " + std::to_string(b.id));
        if (b.role == BusRole::Slack)
            ++slacks;
        if (b.role != BusRole::PQ && !(b.v_set > 0.0))
            throw SemanticError("bus " + std::to_string(b.id) + " needs a positive voltage setpoint");
    }
    if (slacks == 0)
        throw SemanticError("missing slack bus");
    if (slacks > 1)
        throw SemanticError("more than one slack bus");
    for (const auto& br : c.branches) {
        if (!ids.count(br.from) || !ids.count(br.to))
            throw SemanticError("dangling branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
        if (br.status && br.r == 0.0 && br.x == 0.0)
            throw SemanticError("zero-impedance branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
        if (!(br.tap_ratio > 0.0))
            throw SemanticError("branch tap ratio must be positive");
    }
    for (const auto& g : c.generators) {
        if (!ids.count(g.bus))
            throw SemanticError("generator at unknown bus " + std::to_string(g.bus));
        if (g.i_max && !(*g.i_max > 0.0))
            throw SemanticError("current limit at bus " + std::to_string(g.bus) + " must be positive");
    }
}

// ------------------------------------------------------------ MATPOWER

namespace {

struct Statement {
    std::string field;
    std::size_t position;
    std::vector<std::vector<double>> rows; // scalar -> 1x1
    bool numeric = true;
};

class MatpowerLexer {
  public:
    explicit MatpowerLexer(std::string_view text) : text_(text) {}

    std::vector<Statement> statements() {
        std::vector<Statement> out;
        while (true) {
            skip_space_and_comments();
            if (pos_ >= text_.size())
                break;
            const std::size_t start = pos_;
            std::string word = identifier();
            if (word.empty())
                throw SyntaxError(start, std::string(1, text_[start]), "unexpected character");
            if (word == "function") {
                skip_line();
                continue;
            }
            if (word.rfind("mpc.", 0) != 0) {
                throw SyntaxError(start, word, "expected an mpc.<field> assignment");
            }
            skip_inline_space();
            expect('=');
            skip_inline_space();
            Statement st{word.substr(4), start, {}, true};
            parse_value(st);
            skip_inline_space();
            if (pos_ < text_.size() && text_[pos_] == ';')
                ++pos_;
            out.push_back(std::move(st));
        }
        return out;
    }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_line() {
        while (pos_ < text_.size() && text_[pos_] != '\n')
            ++pos_;
    }
    void skip_inline_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
            ++pos_;
    }
    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(ch)))
                ++pos_;
            else if (ch == '%')
                skip_line();
            else
                break;
        }
    }
    std::string identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')
                ++pos_;
            else
                break;
        }
        return std::string(text_.substr(start, pos_ - start));
    }
    void expect(char ch) {
        if (pos_ >= text_.size() || text_[pos_] != ch)
            throw SyntaxError(pos_, pos_ < text_.size() ? std::string(1, text_[pos_]) : "<eof>",
                              std::string("expected '") + ch + "'");
        ++pos_;
    }
    std::string token_at(std::size_t p) const {
        std::size_t e = p;
        while (e < text_.size() && !std::isspace(static_cast<unsigned char>(text_[e])) && e - p < 16)
            ++e;
        return p < text_.size() ? std::string(text_.substr(p, e - p)) : "<eof>";
    }
    double number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '+' || ch == '-')
                ++pos_;
            else
                break;
        }
        const std::string tok(text_.substr(start, pos_ - start));
        if (tok == "Inf" || tok == "inf")
            return HUGE_VAL;
        if (tok == "-Inf" || tok == "-inf")
            return -HUGE_VAL;
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size())
                throw SyntaxError(start, tok, "malformed number");
            return v;
        } catch (const std::logic_error&) {
            throw SyntaxError(start, tok.empty() ? token_at(start) : tok, "malformed number");
        }
    }
    void skip_balanced(char open, char close) {
        const std::size_t start = pos_;
        int depth = 0;
        bool in_string = false;
        for (; pos_ < text_.size(); ++pos_) {
            const char ch = text_[pos_];
            if (ch == '\'')
                in_string = !in_string;
            if (in_string)
                continue;
            if (ch == '%') {
                skip_line();
                continue;
            }
            if (ch == open)
                ++depth;
            if (ch == close && --depth == 0) {
                ++pos_;
                return;
            }
        }
        throw SyntaxError(start, std::string(1, open), "unterminated bracket");
    }
    void parse_value(Statement& st) {
        if (pos_ >= text_.size())
            throw SyntaxError(pos_, "<eof>", "missing value");
        const char ch = text_[pos_];
        if (ch == '\'') {
            const std::size_t start = pos_++;
            while (pos_ < text_.size() && text_[pos_] != '\'')
                ++pos_;
            if (pos_ >= text_.size())
                throw SyntaxError(start, "'", "unterminated string");
            ++pos_;
            st.numeric = false;
            return;
        }
        if (ch == '{') {
            skip_balanced('{', '}');
            st.numeric = false;
            return;
        }
        if (ch != '[') {
            st.rows.push_back({number()});
            return;
        }
        const std::size_t open = pos_++;
        std::vector<double> row;
        while (true) {
            if (pos_ >= text_.size())
                throw SyntaxError(open, "[", "unterminated matrix");
            const char c = text_[pos_];
            if (c == ']') {
                ++pos_;
                break;
            }
            if (c == ';' || c == '\n') {
                ++pos_;
                if (!row.empty())
                    st.rows.push_back(std::move(row));
                row.clear();
            } else if (c == '%') {
                skip_line();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
                ++pos_;
            } else if (c == '.' && text_.substr(pos_, 3) == "...") {
                skip_line();
            } else {
                row.push_back(number());
            }
        }
        if (!row.empty())
            st.rows.push_back(std::move(row));
        const std::size_t width = st.rows.empty() ? 0 : st.rows.front().size();
        for (const auto& r : st.rows)
            if (r.size() != width)
                throw SyntaxError(open, "mpc." + st.field, "rows of unequal length");
    }
};

const Statement* find_field(const std::vector<Statement>& sts, const std::string& name) {
    for (const auto& s : sts)
        if (s.field == name)
            return &s;
    return nullptr;
}

void require_columns(const Statement& st, std::size_t n) {
    if (!st.rows.empty() && st.rows.front().size() < n)
        throw SyntaxError(st.position, "mpc." + st.field,
                          "needs at least " + std::to_string(n) + " columns");
}

int as_id(double v, const std::string& what) {
    if (v != std::floor(v))
        throw SemanticError(what + " must be an integer bus number");
    return static_cast<int>(v);
}

ParseResult parse_matpower(std::string_view text) {
    ParseResult out;
    MatpowerLexer lexer(text);
    const auto sts = lexer.statements();
    static const std::set<std::string> used{"baseMVA", "bus", "gen", "branch", "version"};
    for (const auto& s : sts)
        if (!used.count(s.field))
            out.warnings.push_back("ignored field mpc." + s.field);

    const Statement* base = find_field(sts, "baseMVA");
    const Statement* bus = find_field(sts, "bus");
    const Statement* gen = find_field(sts, "gen");
    const Statement* branch = find_field(sts, "branch");
    if (!base || !bus || !branch)
        throw SemanticError("MATPOWER case needs mpc.baseMVA, mpc.bus and mpc.branch");
    if (base->rows.size() != 1 || base->rows[0].size() != 1)
        throw SyntaxError(base->position, "mpc.baseMVA", "expected a scalar");

    NetworkCase& c = out.network;
    c.base_power = base->rows[0][0];
    if (!(c.base_power > 0.0))
        throw SemanticError("base power must be positive");
    const double sb = c.base_power;

    require_columns(*bus, 13);
    for (const auto& r : bus->rows) {
        BusRecord b;
        b.id = as_id(r[0], "bus id");
        switch (static_cast<int>(r[1])) {
        case 1: b.role = BusRole::PQ; break;
        case 2: b.role = BusRole::PV; break;
        case 3: b.role = BusRole::Slack; break;
        default:
            throw SemanticError("bus " + std::to_string(b.id) + " has unsupported type " +
                                std::to_string(static_cast<int>(r[1])));
        }
        b.p_load = r[2] / sb;
        b.q_load = r[3] / sb;
        b.shunt_g = r[4] / sb;
        b.shunt_b = r[5] / sb;
        b.v_set = r[7];
        c.buses.push_back(b);
    }

    if (gen) {
        require_columns(*gen, 8);
        for (const auto& r : gen->rows) {
            if (r[7] <= 0.0)
                continue; // out of service
            GenRecord g;
            g.bus = as_id(r[0], "generator bus");
            g.p_set = r[1] / sb;
            g.q_set = r[2] / sb;
            g.v_set = r[5];
            c.generators.push_back(g);
        }
    }
    // Regulated buses take their setpoint from the attached unit.
    for (auto& b : c.buses) {
        if (b.role == BusRole::PQ)
            continue;
        for (const auto& g : c.generators)
            if (g.bus == b.id) {
                b.v_set = g.v_set;
                break;
            }
    }

    require_columns(*branch, 11);
    for (const auto& r : branch->rows) {
        BranchRecord br;
        br.from = as_id(r[0], "branch endpoint");
        br.to = as_id(r[1], "branch endpoint");
        br.r = r[2];
        br.x = r[3];
        br.b_charging = r[4];
        br.tap_ratio = r[8] == 0.0 ? 1.0 : r[8];
        br.phase_shift = r[9] * M_PI / 180.0;
        br.status = r[10] > 0.0;
        c.branches.push_back(br);
    }

    validate(c);
    return out;
}

// ---------------------------------------------------------- native JSON

BusRole role_from(const std::string& s) {
    if (s == "slack")
        return BusRole::Slack;
    if (s == "pq")
        return BusRole::PQ;
    if (s == "pv")
        return BusRole::PV;
    throw SemanticError("unknown bus role '" + s + "'");
}

ModeHint mode_from(const std::string& s) {
    if (s == "grid_following")
        return ModeHint::GridFollowingPQ;
    if (s == "grid_forming")
        return ModeHint::GridFormingPV;
    throw SemanticError("unknown converter mode '" + s + "'");
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->template get<T>();
}

ParseResult parse_native(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const std::string tok = at < text.size() ? std::string(1, text[at]) : "<eof>";
        throw SyntaxError(at, tok, "invalid JSON");
    }

    ParseResult out;
    NetworkCase& c = out.network;
    try {
        c.name = field_or<std::string>(doc, "name", "");
        c.base_power = doc.at("base_mva").get<double>();
        for (const auto& jb : doc.at("buses")) {
            BusRecord b;
            b.id = jb.at("id").get<int>();
            b.role = role_from(jb.at("role").get<std::string>());
            b.p_load = field_or(jb, "p_load", 0.0);
            b.q_load = field_or(jb, "q_load", 0.0);
            b.v_set = field_or(jb, "v_set", 1.0);
            b.shunt_g = field_or(jb, "shunt_g", 0.0);
            b.shunt_b = field_or(jb, "shunt_b", 0.0);
            c.buses.push_back(b);
        }
        for (const auto& jr : doc.at("branches")) {
            BranchRecord br;
            br.from = jr.at("from").get<int>();
            br.to = jr.at("to").get<int>();
            br.r = field_or(jr, "r", 0.0);
            br.x = field_or(jr, "x", 0.0);
            br.b_charging = field_or(jr, "b_charging", 0.0);
            br.tap_ratio = field_or(jr, "tap_ratio", 1.0);
            br.phase_shift = field_or(jr, "phase_shift", 0.0);
            br.status = field_or(jr, "status", true);
            c.branches.push_back(br);
        }
        if (doc.contains("generators"))
            for (const auto& jg : doc.at("generators")) {
                GenRecord g;
                g.bus = jg.at("bus").get<int>();
                g.p_set = field_or(jg, "p_set", 0.0);
                g.q_set = field_or(jg, "q_set", 0.0);
                g.v_set = field_or(jg, "v_set", 1.0);
                c.generators.push_back(g);
            }
        if (doc.contains("converters"))
            for (const auto& jc : doc.at("converters")) {
                const int bus_id = jc.at("bus").get<int>();
                auto it = std::find_if(c.generators.begin(), c.generators.end(),
                                       [&](const GenRecord& g) { return g.bus == bus_id && !g.mode_hint; });
                if (it == c.generators.end()) {
                    GenRecord g;
                    g.bus = bus_id;
                    c.generators.push_back(g);
                    it = std::prev(c.generators.end());
                }
                it->mode_hint = mode_from(jc.at("mode").get<std::string>());
                if (jc.contains("i_max") && !jc["i_max"].is_null())
                    it->i_max = jc["i_max"].get<double>();
                if (jc.contains("v_set") && !jc["v_set"].is_null())
                    it->v_set = jc["v_set"].get<double>();
            }
    } catch (const json::exception& e) {
        throw SemanticError(std::string("case schema: ") + e.what());
    }
    for (const auto& key : doc.items())
        if (key.key() != "name" && key.key() != "base_mva" && key.key() != "buses" && key.key() != "branches" &&
            key.key() != "generators" && key.key() != "converters")
            out.warnings.push_back("ignored field " + key.key());
    validate(c);
    return out;
}

} // namespace

ParseResult parse_case_with_warnings(std::string_view text, CaseFormat format) {
    return format == CaseFormat::MatpowerM ? parse_matpower(text) : parse_native(text);
}

NetworkCase parse_case(std::string_view text, CaseFormat format) {
    return parse_case_with_warnings(text, format).network;
}

CaseFormat format_for_path(const std::string& path) {
    auto ends_with = [&](const std::string& s) {
        return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".m"))
        return CaseFormat::MatpowerM;
    if (ends_with(".json"))
        return CaseFormat::NativeJson;
    throw SemanticError("cannot infer case format from '" + path + "' (expected .m or .json)");
}

NetworkCase load_case(const std::string& path) {
    const CaseFormat fmt = format_for_path(path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SemanticError("cannot open case file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    NetworkCase c = parse_case(buf.str(), fmt);
    if (c.name.empty()) {
        const auto slash = path.find_last_of('/');
        const std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
        c.name = base.substr(0, base.find_last_of('.'));
    }
    return c;
}

std::string serialize_json(const NetworkCase& c) {
    json doc;
    doc["name"] = c.name;
    doc["base_mva"] = c.base_power;
    doc["buses"] = json::array();
    for (const auto& b : c.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"role", to_string(b.role)},
                                {"p_load", b.p_load},
                                {"q_load", b.q_load},
                                {"v_set", b.v_set},
                                {"shunt_g", b.shunt_g},
                                {"shunt_b", b.shunt_b}});
    doc["branches"] = json::array();
    for (const auto& br : c.branches)
        doc["branches"].push_back({{"from", br.from},
                                   {"to", br.to},
                                   {"r", br.r},
                                   {"x", br.x},
                                   {"b_charging", br.b_charging},
                                   {"tap_ratio", br.tap_ratio},
                                   {"phase_shift", br.phase_shift},
                                   {"status", br.status}});
    doc["generators"] = json::array();
    doc["converters"] = json::array();
    // Input order is kept, except that within one bus converter units take
    // the earliest slots: on parse a converter re-attaches to the first
    // plain record at its bus.
    std::vector<const GenRecord*> order(c.generators.size());
    std::map<int, std::vector<std::size_t>> slots;
    for (std::size_t k = 0; k < c.generators.size(); ++k)
        slots[c.generators[k].bus].push_back(k);
    for (const auto& [bus, idx] : slots) {
        std::vector<const GenRecord*> units;
        for (std::size_t k : idx)
            if (c.generators[k].mode_hint)
                units.push_back(&c.generators[k]);
        for (std::size_t k : idx)
            if (!c.generators[k].mode_hint)
                units.push_back(&c.generators[k]);
        for (std::size_t n = 0; n < idx.size(); ++n)
            order[idx[n]] = units[n];
    }
    for (const GenRecord* g : order) {
        doc["generators"].push_back({{"bus", g->bus}, {"p_set", g->p_set}, {"q_set", g->q_set}, {"v_set", g->v_set}});
        if (g->mode_hint) {
            json conv = {{"bus", g->bus}, {"mode", to_string(*g->mode_hint)}, {"i_max", nullptr}, {"v_set", g->v_set}};
            if (g->i_max)
                conv["i_max"] = *g->i_max;
            doc["converters"].push_back(conv);
        }
    }
    return doc.dump(2) + "\n";
}

AdmittanceMatrix build_ybus(const NetworkCase& c) {
    AdmittanceMatrix y;
    y.order = c.buses.size();
    y.entries = numerics::ComplexMatrix(y.order, y.order);
    for (std::size_t k = 0; k < c.buses.size(); ++k)
        y.index_map[c.buses[k].id] = k;
    auto& m = y.entries;
    for (const auto& br : c.branches) {
        if (!br.status)
            continue;
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex half_b(0.0, br.b_charging / 2.0);
        const Complex t = std::polar(br.tap_ratio, br.phase_shift);
        const std::size_t f = y.index(br.from);
        const std::size_t to = y.index(br.to);
        m(f, f) += (ys + half_b) / (br.tap_ratio * br.tap_ratio);
        m(to, to) += ys + half_b;
        m(f, to) += -ys / std::conj(t);
        m(to, f) += -ys / t;
    }
    for (std::size_t k = 0; k < c.buses.size(); ++k)
        m(k, k) += Complex(c.buses[k].shunt_g, c.buses[k].shunt_b);
    return y;
}

NetworkCase scale_loading(const NetworkCase& c, double lambda, ScalingTarget targets) {
    if (!(lambda >= 0.0))
        throw SemanticError("loading factor must be nonnegative");
    NetworkCase out = c;
    if (targets != ScalingTarget::IbrOnly)
        for (auto& b : out.buses) {
            b.p_load *= lambda;
            b.q_load *= lambda;
        }
    if (targets != ScalingTarget::LoadsOnly)
        for (auto& g : out.generators)
            if (g.mode_hint) {
                g.p_set *= lambda;
                g.q_set *= lambda;
            }
    return out;
}

} // namespace wirtstab::casemodel
