#pragma once

#include <string>

#include "uechecker/frontend/call_graph.hpp"

namespace uechecker::testing_cases {

using frontend::CallKind;

// Hand-labeled classification corpus. Each case holds a complete unit and
// the one call expected inside function `t`.
struct ClassCase {
  const char* name;
  const char* source;
  const char* callee_name;
  CallKind kind;
};

inline constexpr const char* kIface =
    "interface IERC20 { function transfer(address to, uint256 v) external returns (bool); "
    "function approve(address s, uint256 v) external returns (bool); }\n"
    "library SafeMath { function add(uint256 a, uint256 b) internal pure returns (uint256) { return a + b; } }\n";

inline std::string with_iface(const char* body) { return std::string(kIface) + body; }

inline constexpr ClassCase kCases[] = {
    {"this_member", "contract C { function t() public { this.h(); } function h() public {} }", "h", CallKind::kExternal},
    {"bare_internal", "contract C { function t() public { h(); } function h() internal {} }", "h", CallKind::kInternal},
    {"iface_state_var", "contract C { IERC20 token; function t() public { token.transfer(msg.sender, 1); } }",
     "transfer", CallKind::kExternal},
    {"address_transfer", "contract C { address payable to; function t() public { to.transfer(1); } }", "transfer",
     CallKind::kExternal},
    {"address_send", "contract C { address payable to; function t() public { to.send(1); } }", "send",
     CallKind::kExternal},
    {"address_call_value", "contract C { address to; function t() public { to.call{value: 1}(\"\"); } }", "call",
     CallKind::kExternal},
    {"address_delegatecall", "contract C { address impl; function t(bytes memory d) public { impl.delegatecall(d); } }",
     "delegatecall", CallKind::kExternal},
    {"library_direct", "contract C { function t() public { SafeMath.add(1, 2); } }", "add", CallKind::kInternal},
    {"using_for", "contract C { using SafeMath for uint256; function t(uint256 x) public { x.add(1); } }", "add",
     CallKind::kInternal},
    {"using_for_star", "contract C { using SafeMath for *; uint256 y; function t() public { y.add(1); } }", "add",
     CallKind::kInternal},
    {"cast_member", "contract C { function t(address a) public { IERC20(a).transfer(msg.sender, 1); } }", "transfer",
     CallKind::kExternal},
    {"local_iface_var", "contract C { function t(address a) public { IERC20 x = IERC20(a); x.approve(a, 1); } }",
     "approve", CallKind::kExternal},
    {"param_iface", "contract C { function t(IERC20 x) public { x.approve(msg.sender, 1); } }", "approve",
     CallKind::kExternal},
    {"super_call", "contract B { function h() public virtual {} } contract C is B { function t() public { super.h(); } }",
     "h", CallKind::kInternal},
    {"inherited_bare", "contract B { function h() internal {} } contract C is B { function t() public { h(); } }", "h",
     CallKind::kInternal},
    {"array_of_iface", "contract C { IERC20[] tokens; function t() public { tokens[0].transfer(msg.sender, 1); } }",
     "transfer", CallKind::kExternal},
    {"msg_sender_transfer", "contract C { function t() public { payable(msg.sender).transfer(1); } }", "transfer",
     CallKind::kExternal},
    {"address_this_call", "contract C { function t(bytes memory d) public { address(this).call(d); } }", "call",
     CallKind::kExternal},
    {"contract_typed_var",
     "contract Pool { function deposit() external {} } contract C { Pool pool; function t() public { pool.deposit(); } }",
     "deposit", CallKind::kExternal},
    {"private_helper_args",
     "contract C { function _update(uint a, uint b) private {} function t() public { _update(1, 2); } }", "_update",
     CallKind::kInternal},
};

}  // namespace uechecker::testing_cases
