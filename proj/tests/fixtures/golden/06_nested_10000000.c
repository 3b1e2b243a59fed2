#include <stdio.h>

int grid[6][8][10];
#pragma acc declare create(grid[0:6][0:8][0:10])
int out[6][8];
double acc[6][8][10];

int main(void) {
  int i, j, k;

  #pragma acc kernels
  for (i = 0; i < 6; i++)
    for (j = 0; j < 8; j++)
      for (k = 0; k < 10; k++)
        grid[i][j][k] = i * 100 + j * 10 + k;
  #pragma acc update self(grid[0:6][0:8][0:10])

  for (i = 0; i < 6; i++) {
    out[i][0] = i;
    for (j = 1; j < 8; j++)
      for (k = 0; k < 10; k++)
        acc[i][j][k] = (double)grid[i][j][k] * 0.5;
  }

  for (i = 1; i < 5; i++)
    for (j = 1; j < 7; j++)
      out[i][j] = grid[i][j][3] + grid[i - 1][j][2];

  printf("%d %d %f\n", out[2][3], out[0][0], acc[3][4][5]);
  return 0;
}
