package com.example.util;

import java.util.*;
import java.io.IOException;
import static java.lang.Math.max;

public class Imports {
	static int best(List<Integer> xs) throws IOException {
		int b = 0;
		for (int x : xs) b = max(b, x);
		return b;
	}
}
