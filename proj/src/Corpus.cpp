//===- Corpus.cpp - Built-in kernel programs ------------------------------===//

#include "hida/Corpus.h"

#include "hida/Frontend.h"

#include <stdexcept>

namespace hida {

namespace {

const char *Listing1 = R"(// Scaled matmul with a strided producer feed.
array Ain[32][16] : float32 @ external;
array Bin[16][16] : float32 @ external;
array A[32][16] : float32 @ onchip;
array B[16][16] : float32 @ onchip;
array C[16][16] : float32 @ external;

for i in 0..32 {
  for k in 0..16 {
    A[i][k] = Ain[i][k] * 0.5;
  }
}
for k in 0..16 {
  for j in 0..16 {
    B[k][j] = Bin[k][j] * 0.5;
  }
}
for i in 0..16 {
  for j in 0..16 {
    for k in 0..16 {
      C[i][j] += A[i*2][k] * B[k][j];
    }
  }
}
)";

const char *Diamond = R"(// Two-arm diamond with unequal arm lengths.
array In0[16] : float32 @ external;
array X[16] : float32 @ onchip;
array Y[16] : float32 @ onchip;
array Z[16] : float32 @ external;

for i in 0..16 {
  X[i] = In0[i] + 1.0;
}
for i in 0..16 {
  Y[i] = X[i] * 2.0;
}
for i in 0..16 {
  Z[i] = X[i] + Y[i];
}
)";

const char *MultiProducerInternal = R"(// Two writers of an on-chip buffer, second one reads it back.
array I0[16] : int32 @ external;
array X[16] : int32 @ onchip;
array O1[16] : int32 @ external;

for i in 0..16 {
  X[i] = I0[i] + 1;
}
for i in 0..16 {
  X[i] = X[i] * 2;
}
for i in 0..16 {
  O1[i] = X[i] + 3;
}
)";

const char *MultiProducerExternal = R"(// Two writers of an external buffer.
array I0[16] : float32 @ external;
array I1[16] : float32 @ external;
array Xe[16] : float32 @ external;
array O1[16] : float32 @ external;

for i in 0..16 {
  Xe[i] = I0[i] * 2.0;
}
for i in 0..16 {
  Xe[i] = Xe[i] + I1[i];
}
for i in 0..16 {
  O1[i] = Xe[i] * 3.0;
}
)";

const char *TwoMMSmall = R"(// D = (A x B) x C with an on-chip intermediate.
array A[8][8] : float32 @ external;
array B[8][8] : float32 @ external;
array C[8][8] : float32 @ external;
array T[8][8] : float32 @ onchip;
array D[8][8] : float32 @ external;

for i in 0..8 {
  for j in 0..8 {
    for k in 0..8 {
      T[i][j] += A[i][k] * B[k][j];
    }
  }
}
for i in 0..8 {
  for j in 0..8 {
    for k in 0..8 {
      D[i][j] += T[i][k] * C[k][j];
    }
  }
}
)";

const char *ThreeMMSmall = R"(// G = (A x B) x (Cm x Dm); the two arms are balanced.
array A[8][8] : float32 @ external;
array B[8][8] : float32 @ external;
array Cm[8][8] : float32 @ external;
array Dm[8][8] : float32 @ external;
array E[8][8] : float32 @ onchip;
array F[8][8] : float32 @ onchip;
array G[8][8] : float32 @ external;

for i in 0..8 {
  for j in 0..8 {
    for k in 0..8 {
      E[i][j] += A[i][k] * B[k][j];
    }
  }
}
for i in 0..8 {
  for j in 0..8 {
    for k in 0..8 {
      F[i][j] += Cm[i][k] * Dm[k][j];
    }
  }
}
for i in 0..8 {
  for j in 0..8 {
    for k in 0..8 {
      G[i][j] += E[i][k] * F[k][j];
    }
  }
}
)";

const char *BicgSmall = R"(// BiCG kernel: two independent matrix-vector products over A.
array A[12][12] : float32 @ external;
array p[12] : float32 @ external;
array r[12] : float32 @ external;
array s[12] : float32 @ external;
array q[12] : float32 @ external;

for i in 0..12 {
  for j in 0..12 {
    s[j] += A[i][j] * r[i];
  }
}
for i in 0..12 {
  for j in 0..12 {
    q[i] += A[i][j] * p[j];
  }
}
)";

const char *GesummvSmall = R"(// GESUMMV: two matrix-vector products combined pointwise.
array A[12][12] : float32 @ external;
array B[12][12] : float32 @ external;
array x[12] : float32 @ external;
array t[12] : float32 @ onchip;
array y[12] : float32 @ onchip;
array out[12] : float32 @ external;

for i in 0..12 {
  for j in 0..12 {
    t[i] += A[i][j] * x[j];
  }
}
for i in 0..12 {
  for j in 0..12 {
    y[i] += B[i][j] * x[j];
  }
}
for i in 0..12 {
  out[i] = t[i] * 1.5 + y[i] * 2.5;
}
)";

const char *Jacobi2DSmall = R"(// Two Jacobi sweeps; borders stay zero.
array Ain[10][10] : float32 @ external;
array Mid[10][10] : float32 @ onchip;
array Aout[10][10] : float32 @ external;

for i in 1..9 {
  for j in 1..9 {
    Mid[i][j] = (Ain[i][j] + Ain[i][j-1] + Ain[i][j+1] + Ain[i+1][j] + Ain[i-1][j]) * 0.2;
  }
}
for i in 1..9 {
  for j in 1..9 {
    Aout[i][j] = (Mid[i][j] + Mid[i][j-1] + Mid[i][j+1] + Mid[i+1][j] + Mid[i-1][j]) * 0.2;
  }
}
)";

const char *SingleLoop = R"(// One nest only; stays a single kernel through the whole flow.
array In0[32] : float32 @ external;
array Out0[32] : float32 @ external;

for i in 0..32 {
  Out0[i] = In0[i] * 3.0;
}
)";

} // namespace

const std::vector<CorpusEntry> &corpus() {
  static const std::vector<CorpusEntry> Entries = {
      {"listing1", Listing1},
      {"diamond", Diamond},
      {"multiproducer-internal", MultiProducerInternal},
      {"multiproducer-external", MultiProducerExternal},
      {"2mm-small", TwoMMSmall},
      {"3mm-small", ThreeMMSmall},
      {"bicg-small", BicgSmall},
      {"gesummv-small", GesummvSmall},
      {"jacobi2d-small", Jacobi2DSmall},
      {"single-loop", SingleLoop},
  };
  return Entries;
}

Program corpusProgram(const std::string &name) {
  for (const CorpusEntry &e : corpus())
    if (e.name == name)
      return parseKernel(e.source, e.name);
  throw std::out_of_range("no corpus program named '" + name + "'");
}

} // namespace hida
