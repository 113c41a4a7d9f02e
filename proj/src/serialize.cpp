#include "qem/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qem {

namespace {

constexpr std::array<char, 8> kMagic{'Q', 'E', 'M', 'T', 'N', 'E', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

template<typename T>
void put(std::ostream &os, T v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template<typename T>
T get(std::istream &is) {
    T v{};
    is.read(reinterpret_cast<char *>(&v), sizeof v);
    if(!is) throw std::runtime_error("read_network: truncated file");
    return v;
}

} // namespace

void write_network(std::ostream &os, const NetworkFile &f) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kSerializationVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.kind));
    put<std::uint32_t>(os, f.rows);
    put<std::uint32_t>(os, f.cols);
    put<std::uint64_t>(os, f.sites.size());
    for(const auto &t : f.sites) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
        for(Index d : t.dims()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    }
    for(const auto &t : f.sites) os.write(reinterpret_cast<const char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(cplx)));
    if(!os) throw std::runtime_error("write_network: stream error");
}

NetworkFile read_network(std::istream &is) {
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if(!is || magic != kMagic) throw std::runtime_error("read_network: not a tensor-network file");
    const auto version = get<std::uint32_t>(is);
    if(version != kSerializationVersion) throw std::runtime_error("read_network: unsupported version " + std::to_string(version));
    NetworkFile f;
    const auto  kind = get<std::uint32_t>(is);
    if(kind < 1 || kind > 4) throw std::runtime_error("read_network: unknown network kind");
    f.kind          = static_cast<NetworkKind>(kind);
    f.rows          = get<std::uint32_t>(is);
    f.cols          = get<std::uint32_t>(is);
    const auto n    = get<std::uint64_t>(is);
    if(n != static_cast<std::uint64_t>(f.rows) * f.cols) throw std::runtime_error("read_network: site count does not match the shape");
    std::vector<std::vector<Index>> shapes(n);
    for(auto &s : shapes) {
        const auto rank = get<std::uint32_t>(is);
        if(rank > 16) throw std::runtime_error("read_network: implausible tensor rank");
        for(std::uint32_t k = 0; k < rank; ++k) s.push_back(static_cast<Index>(get<std::uint64_t>(is)));
    }
    for(auto &s : shapes) {
        Tensor t(s);
        is.read(reinterpret_cast<char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(cplx)));
        if(!is) throw std::runtime_error("read_network: truncated payload");
        f.sites.push_back(std::move(t));
    }
    return f;
}

void save(const std::string &path, const Mpo &m) {
    std::ofstream os(path, std::ios::binary);
    if(!os) throw std::runtime_error("save: cannot open " + path);
    write_network(os, {NetworkKind::Mpo, 1, static_cast<std::uint32_t>(m.size()), m.sites()});
}

void save(const std::string &path, const Pepo &p) {
    std::ofstream       os(path, std::ios::binary);
    std::vector<Tensor> sites;
    if(!os) throw std::runtime_error("save: cannot open " + path);
    for(int r = 0; r < p.rows(); ++r)
        for(int c = 0; c < p.cols(); ++c) sites.push_back(p.site(r, c));
    write_network(os, {NetworkKind::Pepo, static_cast<std::uint32_t>(p.rows()), static_cast<std::uint32_t>(p.cols()), std::move(sites)});
}

Mpo load_mpo(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if(!is) throw std::runtime_error("load_mpo: cannot open " + path);
    NetworkFile f = read_network(is);
    if(f.kind != NetworkKind::Mpo) throw std::runtime_error("load_mpo: file does not hold an MPO");
    return Mpo(std::move(f.sites));
}

Pepo load_pepo(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if(!is) throw std::runtime_error("load_pepo: cannot open " + path);
    NetworkFile f = read_network(is);
    if(f.kind != NetworkKind::Pepo) throw std::runtime_error("load_pepo: file does not hold a PEPO");
    return {static_cast<int>(f.rows), static_cast<int>(f.cols), std::move(f.sites)};
}

} // namespace qem
