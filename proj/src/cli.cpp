#include "stepscat/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

namespace stepscat::cli {

Quantity parse_quantity(const std::string& name) {
    static const std::map<std::string, Quantity> names{
        {"exact", Quantity::Exact}, {"mm1", Quantity::Mm1},           {"mm2", Quantity::Mm2},
        {"lp1", Quantity::Lp1},     {"inout1", Quantity::InOut1},     {"unitarity", Quantity::Unitarity},
        {"smatrix", Quantity::SMatrix}};
    const auto it = names.find(name);
    if (it == names.end()) throw ConfigError("unknown quantity '" + name + "'");
    return it->second;
}

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::Exact: return "exact";
        case Quantity::Mm1: return "mm1";
        case Quantity::Mm2: return "mm2";
        case Quantity::Lp1: return "lp1";
        case Quantity::InOut1: return "inout1";
        case Quantity::Unitarity: return "unitarity";
        case Quantity::SMatrix: return "smatrix";
    }
    return "?";
}

void ScanConfig::validate() const {
    if (!(p_min > 0.0) || !std::isfinite(p_min)) throw ConfigError("--pmin must be positive");
    if (!(p_max >= p_min) || !std::isfinite(p_max)) throw ConfigError("--pmax must not be below --pmin");
    if (count < 2) throw ConfigError("--count must be at least 2");
    if (grid < 64) throw ConfigError("--grid must be at least 64");
}

std::vector<double> ScanConfig::momenta() const {
    std::vector<double> ps(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double s = double(i) / double(count - 1);
        ps[i] = spacing == Spacing::Linear ? p_min + (p_max - p_min) * s : p_min * std::pow(p_max / p_min, s);
    }
    ps.back() = p_max;
    return ps;
}

Potential default_potential() { return Potential::step_delta(1.0, 0.01); }

Potential ScanConfig::potential() const {
    return potential_file ? load_potential(*potential_file) : default_potential();
}

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("no column " + name);
    return static_cast<std::size_t>(it - columns.begin());
}

void write_csv(const Table& table, std::ostream& os) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (const double* d = std::get_if<double>(&row[i])) {
                os << format_number(*d);
            } else {
                os << std::get<std::string>(row[i]);
            }
        }
        os << '\n';
    }
}

nlohmann::json to_json(const Table& table) {
    nlohmann::json j;
    j["schema"] = table.schema;
    j["meta"] = table.meta;
    j["columns"] = table.columns;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) {
            if (const double* d = std::get_if<double>(&c)) {
                r.push_back(*d);
            } else {
                r.push_back(std::get<std::string>(c));
            }
        }
        j["rows"].push_back(std::move(r));
    }
    return j;
}

void write_table(const Table& table, Format format, std::ostream& os) {
    if (format == Format::Csv) {
        write_csv(table, os);
    } else {
        os << to_json(table).dump(2) << '\n';
    }
}

std::size_t thread_limit() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SCATTER_THREADS")) {
        const std::string s(env);
        std::size_t cap = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), cap);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || cap == 0)
            throw ConfigError("SCATTER_THREADS must be a positive integer");
        n = std::min(n, cap);
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_limit(), n);
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            });
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ExitCode exit_code_of(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return ExitCode::Config;
    return ExitCode::Numerical;
}

namespace {

void add_scan_options(CLI::App& sub, ScanConfig& cfg) {
    sub.add_option("--pmin", cfg.p_min, "Smallest momentum")->capture_default_str();
    sub.add_option("--pmax", cfg.p_max, "Largest momentum")->capture_default_str();
    sub.add_option("--count", cfg.count, "Number of momenta")->capture_default_str();
    sub.add_option("--spacing", cfg.spacing, "linear or log")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Spacing>{{"linear", Spacing::Linear}, {"log", Spacing::Log}}));
    sub.add_option("--grid", cfg.grid, "Quadrature nodes on [a, b]")->capture_default_str();
}

void add_io_options(CLI::App& sub, ScanConfig& cfg) {
    sub.add_option("--potential", cfg.potential_file, "Potential JSON file");
    sub.add_option("--format", cfg.format, "csv or json")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"csv", Format::Csv}, {"json", Format::Json}}));
    sub.add_option("--out", cfg.out, "Output file (default stdout)");
}

void emit(const Table& table, const ScanConfig& cfg, std::ostream& out) {
    if (cfg.out) {
        std::ofstream f(*cfg.out);
        if (!f) throw ConfigError("cannot write " + cfg.out->string());
        write_table(table, cfg.format, f);
        return;
    }
    write_table(table, cfg.format, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"One-dimensional scattering off step-like potentials"};
    app.require_subcommand(1);

    ScanConfig amp_cfg;
    amp_cfg.count = 30;
    Method method = Method::TransferMatrix;
    std::vector<std::string> quantities;
    auto* amp = app.add_subcommand("amplitudes", "Transmission and reflection amplitudes over a momentum scan");
    add_io_options(*amp, amp_cfg);
    add_scan_options(*amp, amp_cfg);
    amp->add_option("--method", method, "tm, mm or lp")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Method>{{"tm", Method::TransferMatrix}, {"mm", Method::Mm}, {"lp", Method::Lp}}));
    amp->add_option("--quantities", quantities, "Extra columns: exact,mm1,mm2,lp1,inout1,unitarity,smatrix")
        ->delimiter(',');

    ScanConfig fig_cfg;
    auto* fig = app.add_subcommand("figure1", "Exact and first/second-order reflectances");
    add_io_options(*fig, fig_cfg);
    add_scan_options(*fig, fig_cfg);

    ScanConfig ver_cfg;
    ver_cfg.count = 8;
    ver_cfg.p_min = 0.5;
    VerifyOptions ver_opts;
    bool identities_only = false;
    auto* ver = app.add_subcommand("verify", "Identity and cross-method checks with a pass/fail report");
    add_io_options(*ver, ver_cfg);
    add_scan_options(*ver, ver_cfg);
    ver->add_flag("--identities-only", identities_only, "Skip the integral-equation checks");
    ver->add_flag("--inject-fault", ver_opts.inject_fault, "Corrupt r_l before checking")->group("");

    ScanConfig gd_cfg;
    GreensDumpConfig gd;
    auto* gdump = app.add_subcommand("greens-dump", "Resolvent kernel along x at fixed x'");
    add_io_options(*gdump, gd_cfg);
    gdump->add_option("--kernel", gd.kernel, "free, shifted, step, in or out")->capture_default_str();
    gdump->add_option("--energy", gd.energy, "Energy")->capture_default_str();
    gdump->add_option("--side", gd.side, "plus or minus")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Side>{{"plus", Side::Plus}, {"minus", Side::Minus}}));
    gdump->add_option("--xprime", gd.x_prime, "Source point")->capture_default_str();
    gdump->add_option("--xmin", gd.x_min)->capture_default_str();
    gdump->add_option("--xmax", gd.x_max)->capture_default_str();
    gdump->add_option("--count", gd.count, "Number of x samples")->capture_default_str();

    ScanConfig pk_cfg;
    PacketDemoConfig pk;
    auto* pkt = app.add_subcommand("packet-demo", "Distance between a packet and its asymptote over time");
    add_io_options(*pkt, pk_cfg);
    pkt->add_option("--channel", pk.channel, "left, right or step")
        ->transform(CLI::CheckedTransformer(std::map<std::string, ReferenceChannel>{
            {"left", ReferenceChannel::Left}, {"right", ReferenceChannel::Right}, {"step", ReferenceChannel::Step}}));
    pkt->add_option("--momentum", pk.packet.momentum, "Central channel momentum")->capture_default_str();
    pkt->add_option("--width", pk.packet.width, "Momentum width")->capture_default_str();
    pkt->add_option("--position", pk.packet.position, "Position at t = 0")->capture_default_str();
    pkt->add_option("--times", pk.times.times_per_sign, "Samples per sign of t")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Config);
    }

    try {
        if (*amp) {
            for (const auto& q : quantities) amp_cfg.quantities.push_back(parse_quantity(q));
            emit(cmd_amplitudes(amp_cfg, method), amp_cfg, out);
        } else if (*fig) {
            emit(cmd_figure1(fig_cfg), fig_cfg, out);
        } else if (*ver) {
            ver_opts.integral_equations = !identities_only;
            const auto rep = cmd_verify(ver_cfg, ver_opts);
            emit(rep.table, ver_cfg, out);
            if (!rep.pass) {
                err << "verify: failed invariants:";
                for (const auto& f : rep.failed) err << ' ' << f;
                err << '\n';
                return static_cast<int>(ExitCode::Invariant);
            }
        } else if (*gdump) {
            emit(cmd_greens_dump(gd_cfg, gd), gd_cfg, out);
        } else if (*pkt) {
            emit(cmd_packet_demo(pk_cfg, pk), pk_cfg, out);
        }
    } catch (const std::exception& e) {
        const auto code = exit_code_of(e);
        err << (code == ExitCode::Config ? "configuration error: " : "numerical failure: ") << e.what() << '\n';
        return static_cast<int>(code);
    }
    return 0;
}

}  // namespace stepscat::cli
