#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "wqed/correlations.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/fields.hpp"
#include "wqed/spectra.hpp"

namespace wqed {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Comma-separated table of numbers with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const CsvTable& table);

void write_bloch_csv(std::ostream& out, const BlochTrace& trace);
void write_field_csv(std::ostream& out, const FieldTrace& trace);
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
/// `detuning_mhz,t_ns,re_v,im_v`
void write_scan_time_csv(std::ostream& out, const ScanResult& scan);
/// `detuning_mhz,freq_mhz,magnitude`
void write_scan_spectrum_csv(std::ostream& out, const ScanResult& scan);
/// `t1_ns,t2_ns,re_g,im_g`, every `stride`-th row and column.
void write_g1_long_csv(std::ostream& out, const TwoTimeGrid& grid, std::size_t stride = 1);
/// First row: times; then one line per t1 with re(G) only.
void write_g1_matrix_csv(std::ostream& out, const TwoTimeGrid& grid, std::size_t stride = 1);
/// `t_ns,freq_mhz,magnitude`
void write_ipsd_csv(std::ostream& out, const IpsdMap& map);
/// `detuning_mhz,omega_mhz,amp_lower,amp_upper`
void write_dressed_table(std::ostream& out, double rabi_mhz, const std::vector<double>& detuning_mhz);

FieldTrace field_from_csv(const CsvTable& table);
/// Radiation traces of a scan from the long time-domain format. Spectra are
/// left empty.
ScanResult scan_from_csv(const CsvTable& table);

nlohmann::json to_json(const EnergyReport& report);
EnergyReport energy_report_from_json(const nlohmann::json& j);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

} // namespace wqed
