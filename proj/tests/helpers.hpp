#pragma once

#include "cimnet/cim.hpp"

namespace cimnet::testing {

// Machine from the hand-worked roofline example: 1 L1 decoder x 4 arrays.
inline HardwareConfig worked_example_machine() {
  HardwareConfig c;
  c.dram_bw = 8;
  c.l2_bw = 64;
  c.l1_bw = 32;
  c.l1_num_child = 1;
  c.ma_bw = 16;
  c.ma_mem_size = std::int64_t{1} << 30;
  c.ma_num_child = 4;
  c.ma_comp_per_core = 4;
  return c;
}

inline HardwareConfig small_machine(std::int64_t l1, std::int64_t ma, std::int64_t mem = std::int64_t{1} << 20) {
  HardwareConfig c;
  c.dram_bw = 16;
  c.l2_bw = 32;
  c.l1_bw = 16;
  c.l1_num_child = l1;
  c.ma_bw = 8;
  c.ma_mem_size = mem;
  c.ma_num_child = ma;
  c.ma_comp_per_core = 8;
  return c;
}

}  // namespace cimnet::testing
