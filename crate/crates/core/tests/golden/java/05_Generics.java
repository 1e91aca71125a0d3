import java.util.List;
import java.util.ArrayList;

public class Generics
{
    static double sumAll(List<? extends Number> nums)
    {
        double s = 0.0;
        for (Number n : nums)
        {
            s += n.doubleValue();
        }
        return s;
    }

    static List<String> names()
    {
        List<String> out = new ArrayList<>();
        out.add("alpha");
        return out;
    }
}
