#pragma once

// Binary tensor-network files. Layout (all little-endian):
//   char[8] "QEMTNET\0", u32 version, u32 kind, u32 rows, u32 cols, u64 site count,
//   per site: u32 rank, u64 dims[rank]; then every site's data as (re, im) double pairs.
// Chains store rows = 1 and cols = site count.

#include "qem/mpo.hpp"
#include "qem/pepo.hpp"

#include <iosfwd>
#include <string>

namespace qem {

enum class NetworkKind : std::uint32_t { Mpo = 1, VecStateMps = 2, Lpdo = 3, Pepo = 4 };

inline constexpr std::uint32_t kSerializationVersion = 1;

struct NetworkFile {
    NetworkKind         kind = NetworkKind::Mpo;
    std::uint32_t       rows = 1;
    std::uint32_t       cols = 0;
    std::vector<Tensor> sites;
};

void        write_network(std::ostream &os, const NetworkFile &f);
NetworkFile read_network(std::istream &is);

void save(const std::string &path, const Mpo &m);
void save(const std::string &path, const Pepo &p);
Mpo  load_mpo(const std::string &path);
Pepo load_pepo(const std::string &path);

} // namespace qem
