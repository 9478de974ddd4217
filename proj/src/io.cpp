#include "wqed/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "wqed/config.hpp"
#include "wqed/dressed.hpp"
#include "wqed/units.hpp"

namespace wqed {

std::string format_double(double v)
{
    if (v == 0.0)
        v = 0.0; // drop the sign of negative zero
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc())
        throw std::runtime_error("cannot format number");
    return std::string(buf.data(), ptr);
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw std::invalid_argument("missing column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string strip_cr(std::string s)
{
    if (!s.empty() && s.back() == '\r')
        s.pop_back();
    return s;
}

} // namespace

CsvTable read_csv(std::istream& in)
{
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("CSV input is empty");
    table.header = split(strip_cr(line));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != table.header.size())
            throw std::invalid_argument("CSV line " + std::to_string(lineno) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(table.header.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            row[i] = parse_double(table.header[i], cells[i]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open " + path.string());
    return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table)
{
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
}

namespace {

struct Row {
    std::ostream& out;
    bool first = true;
    Row& operator<<(double v)
    {
        out << (first ? "" : ",") << format_double(v);
        first = false;
        return *this;
    }
    ~Row() { out << '\n'; }
};

} // namespace

void write_bloch_csv(std::ostream& out, const BlochTrace& trace)
{
    out << "t_ns,sx,sy,sz,re_sm,im_sm\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& s = trace.states[i];
        Row{out} << trace.time(i) << s.sx << s.sy << s.sz << trace.sigma_minus[i].real()
                 << trace.sigma_minus[i].imag();
    }
}

void write_field_csv(std::ostream& out, const FieldTrace& trace)
{
    out << "t_ns,re_v,im_v\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        Row{out} << trace.time(i) << trace.samples[i].real() << trace.samples[i].imag();
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum)
{
    out << "freq_mhz,magnitude\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i)
        Row{out} << spectrum.freq_mhz[i] << spectrum.magnitudes[i];
}

void write_scan_time_csv(std::ostream& out, const ScanResult& scan)
{
    out << "detuning_mhz,t_ns,re_v,im_v\n";
    for (std::size_t r = 0; r < scan.size(); ++r) {
        const auto& tr = scan.radiation[r];
        for (std::size_t i = 0; i < tr.size(); ++i)
            Row{out} << scan.detuning_mhz[r] << tr.time(i) << tr.samples[i].real()
                     << tr.samples[i].imag();
    }
}

void write_scan_spectrum_csv(std::ostream& out, const ScanResult& scan)
{
    out << "detuning_mhz,freq_mhz,magnitude\n";
    for (std::size_t r = 0; r < scan.size(); ++r) {
        const auto& s = scan.spectra[r];
        for (std::size_t i = 0; i < s.size(); ++i)
            Row{out} << scan.detuning_mhz[r] << s.freq_mhz[i] << s.magnitudes[i];
    }
}

void write_g1_long_csv(std::ostream& out, const TwoTimeGrid& grid, std::size_t stride)
{
    if (stride < 1)
        throw std::invalid_argument("stride must be at least 1");
    out << "t1_ns,t2_ns,re_g,im_g\n";
    const auto n = grid.grid.size;
    for (std::size_t r = 0; r < n; r += stride)
        for (std::size_t c = 0; c < n; c += stride) {
            const auto v = grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            Row{out} << grid.grid.time(r) << grid.grid.time(c) << v.real() << v.imag();
        }
}

void write_g1_matrix_csv(std::ostream& out, const TwoTimeGrid& grid, std::size_t stride)
{
    if (stride < 1)
        throw std::invalid_argument("stride must be at least 1");
    const auto n = grid.grid.size;
    out << "t1_ns\\t2_ns";
    for (std::size_t c = 0; c < n; c += stride)
        out << ',' << format_double(grid.grid.time(c));
    out << '\n';
    for (std::size_t r = 0; r < n; r += stride) {
        out << format_double(grid.grid.time(r));
        for (std::size_t c = 0; c < n; c += stride)
            out << ','
                << format_double(
                       grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)).real());
        out << '\n';
    }
}

void write_ipsd_csv(std::ostream& out, const IpsdMap& map)
{
    out << "t_ns,freq_mhz,magnitude\n";
    for (std::size_t r = 0; r < map.t_ns.size(); ++r)
        for (std::size_t c = 0; c < map.omega.size(); ++c)
            Row{out} << map.t_ns[r] << angular_to_mhz(map.omega[c])
                     << map.magnitudes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void write_dressed_table(std::ostream& out, double rabi_mhz, const std::vector<double>& detuning_mhz)
{
    out << "detuning_mhz,omega_mhz,amp_lower,amp_upper\n";
    for (double d : detuning_mhz) {
        const auto p = dressed_prediction(mhz_to_angular(rabi_mhz), mhz_to_angular(d));
        Row{out} << d << angular_to_mhz(p.omega_gen) << p.amp_lower << p.amp_upper;
    }
}

FieldTrace field_from_csv(const CsvTable& table)
{
    const auto ct = table.column("t_ns");
    const auto cr = table.column("re_v");
    const auto ci = table.column("im_v");
    if (table.rows.size() < 2)
        throw std::invalid_argument("field trace needs at least two samples");
    FieldTrace f;
    f.t0 = table.rows[0][ct];
    f.dt = table.rows[1][ct] - table.rows[0][ct];
    for (const auto& row : table.rows)
        f.samples.emplace_back(row[cr], row[ci]);
    return f;
}

ScanResult scan_from_csv(const CsvTable& table)
{
    const auto cd = table.column("detuning_mhz");
    const auto ct = table.column("t_ns");
    const auto cr = table.column("re_v");
    const auto ci = table.column("im_v");
    ScanResult scan;
    std::map<double, std::size_t> index;
    std::vector<std::vector<const std::vector<double>*>> grouped;
    for (const auto& row : table.rows) {
        auto [it, inserted] = index.try_emplace(row[cd], grouped.size());
        if (inserted) {
            grouped.emplace_back();
            scan.detuning_mhz.push_back(row[cd]);
        }
        grouped[it->second].push_back(&row);
    }
    for (const auto& rows : grouped) {
        if (rows.size() < 2)
            throw std::invalid_argument("scan rows need at least two samples each");
        FieldTrace f;
        f.t0 = (*rows[0])[ct];
        f.dt = (*rows[1])[ct] - (*rows[0])[ct];
        for (const auto* r : rows)
            f.samples.emplace_back((*r)[cr], (*r)[ci]);
        scan.radiation.push_back(std::move(f));
    }
    scan.spectra.resize(scan.radiation.size());
    return scan;
}

nlohmann::json to_json(const EnergyReport& r)
{
    return {
        {"window_ns", {r.t_start, r.t_end}},
        {"input_photons", r.input_photons},
        {"transmitted_photons", r.transmitted_photons},
        {"reflected_photons", r.reflected_photons},
        {"deficit", r.deficit},
    };
}

EnergyReport energy_report_from_json(const nlohmann::json& j)
{
    EnergyReport r;
    r.t_start = j.at("window_ns").at(0).get<double>();
    r.t_end = j.at("window_ns").at(1).get<double>();
    r.input_photons = j.at("input_photons").get<double>();
    r.transmitted_photons = j.at("transmitted_photons").get<double>();
    r.reflected_photons = j.at("reflected_photons").get<double>();
    r.deficit = j.at("deficit").get<double>();
    return r;
}

std::string sha256_hex(const std::string& bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

} // namespace wqed
