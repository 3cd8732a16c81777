/* slid_defs.hpp -- shared inductive-definition fixtures for the tests:
 * plseg (consecutive-data list segments), sdllseg (sorted doubly linked
 * segments) and ldllseg (doubly linked segments, lengths mimicked by sets). */

#pragma once

#include "slidset/slid.hpp"

namespace slidset::fixtures {

// plseg(E, S1; F, S2) ::= E = F /\ S1 = S2 /\ emp
// plseg(E, S1; F, S2) ::= ex X, S3. S1 = S3 u {min(S1)} /\ min(S3) = min(S1)+1
//                         /\ E |-> (next: X, data: min(S1)) * plseg(X, S3; F, S2)
inline InductiveDef make_plseg() {
    InductiveDef d;
    d.name = "plseg";
    d.src_root = "E";
    d.src = {{"S1", false}};
    d.dst_root = "F";
    d.dst = {{"S2", false}};
    d.ex_locs = {"X"};
    d.ex_sets = {"S3"};
    DbsRelation r;
    r.primal = true;
    r.ts = {Anchor::MinS};
    r.int_part = {{Anchor::MinSp, Anchor::MinS, 1}, {Anchor::MinS, Anchor::MinSp, -1}};
    d.phi = {r};
    d.rho = {{"next", true, "X", nullptr}, {"data", false, "", tmin("S1")}};
    d.rec_root = "X";
    d.rec = {{"S3", false}};
    return d;
}

// sdllseg(E, P, S1; F, L, S2) ::= E = F /\ P = L /\ S1 = S2 /\ emp
// sdllseg(E, P, S1; F, L, S2) ::= ex X, S3. S1 = S3 u {min(S1)}
//     /\ E |-> (next: X, prev: P, data: min(S1)) * sdllseg(X, E, S3; F, L, S2)
inline InductiveDef make_sdllseg() {
    InductiveDef d;
    d.name = "sdllseg";
    d.src_root = "E";
    d.src = {{"P", true}, {"S1", false}};
    d.dst_root = "F";
    d.dst = {{"L", true}, {"S2", false}};
    d.ex_locs = {"X"};
    d.ex_sets = {"S3"};
    DbsRelation r;
    r.primal = true;
    r.ts = {Anchor::MinS};
    d.phi = {r};
    d.rho = {{"next", true, "X", nullptr},
             {"prev", true, "P", nullptr},
             {"data", false, "", tmin("S1")}};
    d.rec_root = "X";
    d.rec = {{"E", true}, {"S3", false}};
    return d;
}

// ldllseg(E, P, S1; F, L, S2) ::= E = F /\ P = L /\ S1 = S2 /\ emp
// ldllseg(E, P, S1; F, L, S2) ::= ex X, S3. S1 = S3 u {max(S1)} /\ max(S3) = max(S1)-1
//     /\ E |-> (next: X, prev: P) * ldllseg(X, E, S3; F, L, S2)
inline InductiveDef make_ldllseg() {
    InductiveDef d;
    d.name = "ldllseg";
    d.src_root = "E";
    d.src = {{"P", true}, {"S1", false}};
    d.dst_root = "F";
    d.dst = {{"L", true}, {"S2", false}};
    d.ex_locs = {"X"};
    d.ex_sets = {"S3"};
    DbsRelation r;
    r.primal = true;
    r.ts = {Anchor::MaxS};
    r.int_part = {{Anchor::MaxSp, Anchor::MaxS, -1}, {Anchor::MaxS, Anchor::MaxSp, 1}};
    d.phi = {r};
    d.rho = {{"next", true, "X", nullptr}, {"prev", true, "P", nullptr}};
    d.rec_root = "X";
    d.rec = {{"E", true}, {"S3", false}};
    return d;
}

}  // namespace slidset::fixtures
