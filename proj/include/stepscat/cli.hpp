#pragma once

// Command-line front end: momentum scans, identity suites and dumps as CSV
// or JSON.

#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stepscat/potential.hpp"
#include "stepscat/spectral.hpp"

namespace stepscat::cli {

enum class ExitCode : int { Ok = 0, Config = 2, Numerical = 3, Invariant = 4 };

enum class Spacing { Linear, Log };
enum class Format { Csv, Json };
enum class Quantity { Exact, Mm1, Mm2, Lp1, InOut1, Unitarity, SMatrix };
enum class Method { TransferMatrix, Mm, Lp };

Quantity parse_quantity(const std::string& name);
std::string to_string(Quantity q);

struct ScanConfig {
    /// Without a file the step plus delta V0 = 1, V1 = 0.01 (m = hbar = 1).
    std::optional<std::filesystem::path> potential_file;
    double p_min = 0.05;
    double p_max = 3.0;
    std::size_t count = 300;
    Spacing spacing = Spacing::Linear;
    std::vector<Quantity> quantities;
    std::size_t grid = 2000;
    Format format = Format::Csv;
    std::optional<std::filesystem::path> out;

    /// Throws ConfigError unless p_min > 0, p_max >= p_min, count >= 2, grid >= 64.
    void validate() const;
    /// Ascending scan momenta.
    std::vector<double> momenta() const;
    Potential potential() const;
};

Potential default_potential();

/// Shortest decimal that reads back to the same double.
std::string format_number(double x);

using Cell = std::variant<double, std::string>;

struct Table {
    std::string schema;  ///< name/version, e.g. "stepscat.amplitudes/1"
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::json meta = nlohmann::json::object();

    /// Index of a named column; throws std::out_of_range.
    std::size_t column(const std::string& name) const;
};

void write_csv(const Table& table, std::ostream& os);
nlohmann::json to_json(const Table& table);
void write_table(const Table& table, Format format, std::ostream& os);

/// Worker count: hardware concurrency capped by SCATTER_THREADS.
std::size_t thread_limit();

/// Runs fn(i) for i in [0, n) on up to thread_limit() threads. The first
/// exception in index order is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

Table cmd_amplitudes(const ScanConfig& cfg, Method method);
Table cmd_figure1(const ScanConfig& cfg);

struct VerifyOptions {
    /// Also run the integral-equation checks (MM/LP agreement, alternative
    /// LS, two-potential formulas).
    bool integral_equations = true;
    /// Test hook: scale r_l by (1 + 1e-3) before the checks.
    bool inject_fault = false;
};

struct VerifyReport {
    Table table;
    bool pass = true;
    std::vector<std::string> failed;
};

VerifyReport cmd_verify(const ScanConfig& cfg, const VerifyOptions& opts);

struct GreensDumpConfig {
    std::string kernel = "free";
    double energy = 2.0;
    Side side = Side::Plus;
    double x_prime = 0.0;
    double x_min = -5.0;
    double x_max = 5.0;
    std::size_t count = 100;
};

Table cmd_greens_dump(const ScanConfig& cfg, const GreensDumpConfig& g);

struct PacketDemoConfig {
    ReferenceChannel channel = ReferenceChannel::Left;
    PacketSpec packet;
    MollerOptions times;
};

Table cmd_packet_demo(const ScanConfig& cfg, const PacketDemoConfig& p);

ExitCode exit_code_of(const std::exception& e);

/// Full command line (args[0] is the program name). Output goes to the
/// --out file when given, otherwise to out; diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stepscat::cli
