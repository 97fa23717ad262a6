# suq2cs: Chern-Simons action on SU_q(2)
