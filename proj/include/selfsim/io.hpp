#pragma once

// Plain-text exports of finite matrices: portable bitmaps for p = 2 (PBM P1,
// 1 = black), graymaps for larger moduli (PGM P2, maxval p-1), and CSV. The
// writers return the full file contents; callers decide where to put them.

#include <cstddef>
#include <stdexcept>
#include <string>

#include "selfsim/fp.hpp"

namespace selfsim {

inline std::string to_pbm(const FpMatrix& m) {
    if (m.modulus() != 2)
        throw std::invalid_argument("PBM requires entries mod 2");
    std::string out = "P1\n";
    out += std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += char('0' + m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

inline std::string to_pgm(const FpMatrix& m) {
    std::string out = "P2\n";
    out += std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n";
    out += std::to_string(m.modulus() - 1) + "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += std::to_string(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

inline std::string to_csv(const FpMatrix& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += std::to_string(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

}  // namespace selfsim
