"""Hand-written guard-statement corpus with expected extraction outputs.

Each case is a standalone source snippet; `marker` names the line the
trace would have reported (the first line containing it). `predicate` is
the expected verbatim extraction (None to skip the raw comparison when
comment stripping leaves cosmetic spacing); `normalized` is the expected
canonical form. Cases with kind None must raise ExtractionFailure.
"""

SOL = "Solidity"
VYP = "Vyper"


def _sol(body: str) -> str:
    return "contract Fixture {\n  function f() public {\n" + body + "\n  }\n}\n"


GUARD_CASES = [
    # -- category exemplar predicates --------------------------------------
    dict(
        name="wallet_budget",
        language=SOL,
        source=_sol('    require(balanceOf(from) >= amount, "insufficient");'),
        marker="balanceOf(from)",
        kind="Require",
        predicate="balanceOf(from) >= amount",
        message="insufficient",
        normalized="balanceof(from) >= amount",
    ),
    dict(
        name="slippage_floor",
        language=SOL,
        source=_sol("    require(amountOut >= amountOutMin);"),
        marker="amountOut",
        kind="Require",
        predicate="amountOut >= amountOutMin",
        message=None,
        normalized="amountout >= amountoutmin",
    ),
    dict(
        name="fee_exemption_or",
        language=SOL,
        source=_sol(
            '    require(isExcludedFromFees[from]||isExcludedFromFees[to], "fees apply");'
        ),
        marker="isExcludedFromFees",
        kind="Require",
        predicate="isExcludedFromFees[from]||isExcludedFromFees[to]",
        message="fees apply",
        normalized="isexcludedfromfees[from]||isexcludedfromfees[to]",
    ),
    dict(
        name="deadline_revert",
        language=SOL,
        source=_sol("    if (block.timestamp > deadline) revert Expired();"),
        marker="deadline",
        kind="IfRevert",
        predicate="block.timestamp > deadline",
        message="Expired",
        normalized="block.timestamp > deadline",
    ),
    dict(
        name="reserve_sanity",
        language=SOL,
        source=_sol("    assert(reserveIn > 0 && reserveOut > 0);"),
        marker="reserveIn",
        kind="Assert",
        predicate="reserveIn > 0 && reserveOut > 0",
        message=None,
        normalized="reservein > 0 && reserveout > 0",
    ),
    dict(
        name="feature_toggle_positive",
        language=SOL,
        source=_sol('    require(tradeEnabled, "trading not live");'),
        marker="tradeEnabled",
        kind="Require",
        predicate="tradeEnabled",
        message="trading not live",
        normalized="tradeenabled",
    ),
    dict(
        name="feature_toggle_negated",
        language=SOL,
        source=_sol("    require(!launched);"),
        marker="launched",
        kind="Require",
        predicate="!launched",
        message=None,
        normalized="!launched",
    ),
    dict(
        name="feature_toggle_struct",
        language=SOL,
        source=_sol('    require(!data.tradingEnabled, "already live");'),
        marker="tradingEnabled",
        kind="Require",
        predicate="!data.tradingEnabled",
        message="already live",
        normalized="!data.tradingenabled",
    ),
    dict(
        name="replay_prevention",
        language=SOL,
        source=_sol('    require(!usedClaims[claimLeaf], "claim already used");'),
        marker="usedClaims",
        kind="Require",
        predicate="!usedClaims[claimLeaf]",
        message="claim already used",
        normalized="!usedclaims[claimleaf]",
    ),
    dict(
        name="not_paused",
        language=SOL,
        source=_sol('    require(!paused, "paused");'),
        marker="paused",
        kind="Require",
        predicate="!paused",
        message="paused",
        normalized="!paused",
    ),
    dict(
        name="merkle_proof_gate",
        language=SOL,
        source=_sol(
            "    if (!MerkleProof.verify(proof, merkleRoot, leaf)) revert InvalidProof();"
        ),
        marker="MerkleProof",
        kind="IfRevert",
        predicate="!MerkleProof.verify(proof, merkleRoot, leaf)",
        message="InvalidProof",
        normalized="!merkleproof.verify(proof, merkleroot, leaf)",
    ),
    dict(
        name="sender_budget",
        language=SOL,
        source=_sol("    require(balances[msg.sender] >= _amount);"),
        marker="balances[msg.sender]",
        kind="Require",
        predicate="balances[msg.sender] >= _amount",
        message=None,
        normalized="balances[msg.sender] >= _amount",
    ),
    dict(
        name="payment_sanity",
        language=SOL,
        source=_sol('    require(_amount * price == msg.value, "wrong payment");'),
        marker="price",
        kind="Require",
        predicate="_amount * price == msg.value",
        message="wrong payment",
        normalized="_amount * price == msg.value",
    ),
    dict(
        name="blacklist_gate",
        language=SOL,
        source=_sol('    require(!isBlacklisted[msg.sender], "blacklisted");'),
        marker="isBlacklisted",
        kind="Require",
        predicate="!isBlacklisted[msg.sender]",
        message="blacklisted",
        normalized="!isblacklisted[msg.sender]",
    ),
    dict(
        name="cooldown_gate",
        language=SOL,
        source=_sol('    require(cooldown[to] < block.timestamp, "cooldown active");'),
        marker="cooldown",
        kind="Require",
        predicate="cooldown[to] < block.timestamp",
        message="cooldown active",
        normalized="cooldown[to] < block.timestamp",
    ),
    dict(
        name="nonce_gate",
        language=SOL,
        source=_sol('    require(allowed.nonce != nonce, "nonce mismatch");'),
        marker="allowed.nonce",
        kind="Require",
        predicate="allowed.nonce != nonce",
        message="nonce mismatch",
        normalized="allowed.nonce != nonce",
    ),
    dict(
        name="supply_cap",
        language=SOL,
        source=_sol('    require(totalSupply() + mint_amount <= max_supply, "cap");'),
        marker="totalSupply",
        kind="Require",
        predicate="totalSupply() + mint_amount <= max_supply",
        message="cap",
        normalized="totalsupply() + mint_amount <= max_supply",
    ),
    dict(
        name="owner_gate",
        language=SOL,
        source=_sol('    require(owner() == _msgSender(), "caller is not the owner");'),
        marker="owner()",
        kind="Require",
        predicate="owner() == _msgSender()",
        message="caller is not the owner",
        normalized="owner() == _msgsender()",
    ),
    dict(
        name="zero_address",
        language=SOL,
        source=_sol('    require(recipient != address(0), "zero address");'),
        marker="recipient",
        kind="Require",
        predicate="recipient != address(0)",
        message="zero address",
        normalized="recipient != address(0)",
    ),
    dict(
        name="low_level_validation",
        language=SOL,
        source=_sol(
            "    require(success&&(data.length==0||abi.decode(data,(bool))), \"transfer failed\");"
        ),
        marker="abi.decode",
        kind="Require",
        predicate="success&&(data.length==0||abi.decode(data,(bool)))",
        message="transfer failed",
        normalized="success&&(data.length==0||abi.decode(data,(bool)))",
    ),
    dict(
        name="budget_floor",
        language=SOL,
        source=_sol("    require(balance >= amount);"),
        marker="balance",
        kind="Require",
        predicate="balance >= amount",
        message=None,
        normalized="balance >= amount",
    ),
    dict(
        name="ownable_guard",
        language=SOL,
        source=_sol('    require(msg.sender==owner,"caller is not the owner");'),
        marker="msg.sender==owner",
        kind="Require",
        predicate="msg.sender==owner",
        message="caller is not the owner",
        normalized="msg.sender==owner",
    ),
    # -- structural variety ------------------------------------------------
    dict(
        name="multiline_require",
        language=SOL,
        source=_sol(
            "    require(\n"
            "        amount0Out > 0 ||\n"
            "        amount1Out > 0,\n"
            '        "insufficient output amount"\n'
            "    );"
        ),
        marker="amount1Out",
        kind="Require",
        predicate="amount0Out > 0 ||\n        amount1Out > 0",
        message="insufficient output amount",
        normalized="amount0out > 0 || amount1out > 0",
    ),
    dict(
        name="nested_call_commas",
        language=SOL,
        source=_sol(
            "    require(checkRole(keccak256(abi.encodePacked(role, msg.sender)), account),"
            ' "denied");'
        ),
        marker="checkRole",
        kind="Require",
        predicate="checkRole(keccak256(abi.encodePacked(role, msg.sender)), account)",
        message="denied",
        normalized="checkrole(keccak256(abi.encodepacked(role, msg.sender)), account)",
    ),
    dict(
        name="message_with_commas",
        language=SOL,
        source=_sol('    require(x > 0, "value, impossibly, too small");'),
        marker="x > 0",
        kind="Require",
        predicate="x > 0",
        message="value, impossibly, too small",
        normalized="x > 0",
    ),
    dict(
        name="message_with_escaped_quote",
        language=SOL,
        source=_sol('    require(ok, "quote \\" inside");'),
        marker="ok",
        kind="Require",
        predicate="ok",
        message='quote " inside',
        normalized="ok",
    ),
    dict(
        name="single_quoted_message",
        language=SOL,
        source=_sol("    require(ok, 'single quoted');"),
        marker="ok",
        kind="Require",
        predicate="ok",
        message="single quoted",
        normalized="ok",
    ),
    dict(
        name="multiline_assert",
        language=SOL,
        source=_sol("    assert(\n        invariantHolds(a, b)\n    );"),
        marker="invariantHolds",
        kind="Assert",
        predicate="invariantHolds(a, b)",
        message=None,
        normalized="invariantholds(a, b)",
    ),
    dict(
        name="bare_revert",
        language=SOL,
        source=_sol("    if (x == 0) revert();"),
        marker="x == 0",
        kind="IfRevert",
        predicate="x == 0",
        message=None,
        normalized="x == 0",
    ),
    dict(
        name="revert_with_reason_string",
        language=SOL,
        source=_sol('    if (x == 0) revert("zero value");'),
        marker="x == 0",
        kind="IfRevert",
        predicate="x == 0",
        message="zero value",
        normalized="x == 0",
    ),
    dict(
        name="dotted_custom_error",
        language=SOL,
        source=_sol("    if (caller != admin) revert Errors.NotAdmin(caller);"),
        marker="caller != admin",
        kind="IfRevert",
        predicate="caller != admin",
        message="Errors.NotAdmin",
        normalized="caller != admin",
    ),
    dict(
        name="block_bodied_revert",
        language=SOL,
        source=_sol("    if (locked) { revert Reentrancy(); }"),
        marker="locked",
        kind="IfRevert",
        predicate="locked",
        message="Reentrancy",
        normalized="locked",
    ),
    dict(
        name="legacy_throw",
        language=SOL,
        source=_sol("    if (oldVersion) throw;"),
        marker="oldVersion",
        kind="IfRevert",
        predicate="oldVersion",
        message=None,
        normalized="oldversion",
    ),
    dict(
        name="multiline_if_block",
        language=SOL,
        source=_sol(
            "    if (\n"
            "        totalRaised + msg.value > hardCap\n"
            "    ) {\n"
            "        revert CapExceeded();\n"
            "    }"
        ),
        marker="hardCap",
        kind="IfRevert",
        predicate="totalRaised + msg.value > hardCap",
        message="CapExceeded",
        normalized="totalraised + msg.value > hardcap",
    ),
    dict(
        name="non_guard_if",
        language=SOL,
        source=_sol("    if (x > 0) { y = 1; }"),
        marker="x > 0",
        kind=None,  # body does not revert
        predicate=None,
        message=None,
        normalized=None,
    ),
    dict(
        name="block_comments_inside_args",
        language=SOL,
        source=_sol('    require(/* pre */ spendable >= cost /* post */, "cost");'),
        marker="spendable",
        kind="Require",
        predicate=None,  # comment stripping leaves cosmetic spacing
        message="cost",
        normalized="spendable >= cost",
    ),
    dict(
        name="line_comment_inside_multiline",
        language=SOL,
        source=_sol(
            "    require(\n"
            "        shares > 0, // must mint something\n"
            '        "zero shares"\n'
            "    );"
        ),
        marker="shares",
        kind="Require",
        predicate="shares > 0",
        message="zero shares",
        normalized="shares > 0",
    ),
    dict(
        name="vyper_assert_with_message",
        language=VYP,
        source=(
            "@external\n"
            "def withdraw(amount: uint256):\n"
            '    assert self.balances[msg.sender] >= amount, "insufficient funds"\n'
            "    self.balances[msg.sender] -= amount\n"
        ),
        marker="self.balances",
        kind="Assert",
        predicate="self.balances[msg.sender] >= amount",
        message="insufficient funds",
        normalized="self.balances[msg.sender] >= amount",
    ),
    dict(
        name="vyper_assert_plain",
        language=VYP,
        source=(
            "@external\n"
            "def bid():\n"
            "    assert block.timestamp < self.deadline\n"
        ),
        marker="block.timestamp",
        kind="Assert",
        predicate="block.timestamp < self.deadline",
        message=None,
        normalized="block.timestamp < self.deadline",
    ),
    dict(
        name="vyper_assert_parenthesized",
        language=VYP,
        source=(
            "@external\n"
            "def fill(x: uint256, y: uint256):\n"
            '    assert (x + y) <= self.cap, "cap"\n'
        ),
        marker="self.cap",
        kind="Assert",
        predicate="(x + y) <= self.cap",
        message="cap",
        normalized="(x + y) <= self.cap",
    ),
]

assert len(GUARD_CASES) == 40, len(GUARD_CASES)
